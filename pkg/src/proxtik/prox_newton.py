"""Damped Newton solver for one proximal subproblem.

The subproblem is min over theta of  L_hat(theta) + (lam/2) ||theta - theta_ref||^2,
reduced to coefficient space through the representer form theta = sum_i beta_i Phi(x_i).
With f = K beta, D = diag(d2(y_i, f_i)) and gamma_i = d1(y_i, f_i)/n + lam (beta - beta_ref)_i:

  * the gradient of the subproblem is sum_i gamma_i Phi(x_i),
  * the Newton direction is  delta beta = -(D K / n + lam I)^{-1} gamma,
  * the Newton decrement is  sqrt(gamma' K (D K / n + lam I)^{-1} gamma),

all via the push-through identity (Phi* D Phi / n + lam I)^{-1} Phi* = Phi* (D K / n + lam I)^{-1},
so one partial-pivot LU factorization per iteration serves both the step and the
stopping test.  Solves are single-threaded and own their state; distinct solves
over shared immutable (K, y) may run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .kernels import KernelMatrix
from .losses import LossModel, loss_derivatives, loss_value, validate_labels

TOL_FLOOR = 1e-12
FULL_STEP_DECREMENT = 0.1
ARMIJO_SLOPE = 0.25
ARMIJO_SHRINK = 0.5
MIN_STEP = 1e-20
DEFAULT_MAX_ITER = 100


class SolverError(RuntimeError):
    """Raised when a subproblem solve diverges or exhausts its iteration budget."""


@dataclass
class Estimator:
    """A kernel-space function represented by coefficients over the training inputs."""

    coefficients: np.ndarray
    kernel: KernelMatrix

    def predictions(self) -> np.ndarray:
        """Values on the training inputs: K @ beta."""
        return self.kernel.entries @ self.coefficients

    def rkhs_norm_sq(self) -> float:
        c = self.coefficients
        return float(c @ (self.kernel.entries @ c))


def zero_estimator(kernel: KernelMatrix) -> Estimator:
    return Estimator(np.zeros(kernel.n), kernel)


@dataclass
class SubproblemState:
    """Snapshot of one proximal subproblem: current point, reference, and progress."""

    current: Estimator
    reference: Estimator
    lam: float
    decrement: float = np.inf
    iterations: int = 0


@dataclass
class _FactorCache:
    """LU factor of (D K / n + lam I) tagged with the point it was computed at.

    Consecutive subproblems of a proximal trajectory start exactly where the
    previous one stopped, so the factor certified at the last decrement check
    is valid for the next warm start.  For squared loss D is constant and the
    factor depends only on lam.
    """

    lam: float
    quadratic: bool
    predictions: np.ndarray | None = None
    lu: tuple | None = field(default=None, repr=False)

    def matches(self, lam: float, f: np.ndarray) -> bool:
        if self.lu is None or lam != self.lam:
            return False
        if self.quadratic:
            return True
        return self.predictions is not None and np.array_equal(self.predictions, f)


def _gradient_coeffs(loss, y, K, beta, beta_ref, lam, f=None):
    if f is None:
        f = K.entries @ beta
    if not np.all(np.isfinite(f)):
        raise SolverError("non-finite prediction encountered (diverging iterate)")
    d1, d2, _ = loss_derivatives(loss, y, f)
    gamma = d1 / K.n + lam * (beta - beta_ref)
    return gamma, d2, f


def subproblem_gradient_coeffs(loss: LossModel, y, state: SubproblemState) -> np.ndarray:
    """Coefficients of the subproblem gradient in the representer basis."""
    y = validate_labels(loss, y)
    gamma, _, _ = _gradient_coeffs(
        loss, y, state.current.kernel,
        state.current.coefficients, state.reference.coefficients, state.lam,
    )
    return gamma


def _decrement_and_direction(K, gamma, d2, lam, lu=None):
    """One LU solve gives the decrement and the Newton direction."""
    if lu is None:
        A = d2[:, None] * (K.entries / K.n)
        A[np.diag_indices_from(A)] += lam
        try:
            lu = lu_factor(A, overwrite_a=True, check_finite=False)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SolverError(f"linear solve failed: {exc}") from exc
    w = lu_solve(lu, gamma, check_finite=False)
    dec_sq = float(gamma @ (K.entries @ w))
    return np.sqrt(max(dec_sq, 0.0)), w, lu


def newton_decrement(loss: LossModel, y, state: SubproblemState) -> float:
    """Newton decrement of the current point for its subproblem."""
    y = validate_labels(loss, y)
    K = state.current.kernel
    gamma, d2, _ = _gradient_coeffs(
        loss, y, K, state.current.coefficients, state.reference.coefficients, state.lam
    )
    dec, _, _ = _decrement_and_direction(K, gamma, d2, state.lam)
    return dec


def _objective(loss, y, K, beta, beta_ref, lam, f=None):
    if f is None:
        f = K.entries @ beta
    if not np.all(np.isfinite(f)):
        return np.inf
    delta = beta - beta_ref
    penalty = 0.5 * lam * float(delta @ (K.entries @ delta))
    return float(np.mean(loss_value(loss, y, f))) + penalty


def solve_subproblem(
    loss: LossModel,
    K: KernelMatrix,
    y,
    reference: Estimator,
    lam: float,
    tol: float,
    max_iter: int = DEFAULT_MAX_ITER,
    factor_cache: _FactorCache | None = None,
    callback=None,
) -> tuple[Estimator, float]:
    """Solve one proximal subproblem to a Newton-decrement tolerance.

    Starts at the reference point (warm start on the proximal trajectory) and
    performs damped Newton steps: backtracking Armijo line search with factor
    1/2 and slope coefficient 0.25, switching to full steps once the decrement
    drops below 0.1.  Returns the iterate and its certified decrement.

    Raises SolverError when max_iter is exhausted or the line search cannot
    produce a finite objective.
    """
    if lam <= 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    tol = max(tol, TOL_FLOOR)
    y = validate_labels(loss, y)
    beta_ref = reference.coefficients
    beta = beta_ref.copy()

    obj = None
    for iteration in range(max_iter + 1):
        gamma, d2, f = _gradient_coeffs(loss, y, K, beta, beta_ref, lam)
        lu = None
        if factor_cache is not None and factor_cache.matches(lam, f):
            lu = factor_cache.lu
        dec, w, lu = _decrement_and_direction(K, gamma, d2, lam, lu=lu)
        if factor_cache is not None:
            factor_cache.lam = lam
            factor_cache.predictions = f
            factor_cache.lu = lu
        if callback is not None:
            obj = _objective(loss, y, K, beta, beta_ref, lam, f=f) if obj is None else obj
            callback(iteration, obj, dec)
        if dec <= tol:
            return Estimator(beta, K), dec
        if iteration == max_iter:
            raise SolverError(
                f"subproblem did not reach decrement {tol:.3e} in {max_iter} iterations "
                f"(last decrement {dec:.3e})"
            )

        if dec < FULL_STEP_DECREMENT:
            beta = beta - w
            obj = None
            continue
        if obj is None:
            obj = _objective(loss, y, K, beta, beta_ref, lam, f=f)
        step = 1.0
        while True:
            candidate = beta - step * w
            cand_obj = _objective(loss, y, K, candidate, beta_ref, lam)
            if cand_obj <= obj - ARMIJO_SLOPE * step * dec * dec:
                beta = candidate
                obj = cand_obj
                break
            step *= ARMIJO_SHRINK
            if step < MIN_STEP:
                raise SolverError("line search failed: step collapsed without a finite decrease")
    raise AssertionError("unreachable")
