"""Closed-form spectral filters for squared loss: the independent oracle.

The t-step filter is g(sigma) = sigma^{-1} (1 - (lam/(sigma+lam))^t), extended
by continuity to g(0) = t/lam, with residual 1 - sigma g(sigma) =
(lam/(sigma+lam))^t.  Both are evaluated through expm1/log1p so small
eigenvalues do not lose precision to cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelMatrix
from .prox_newton import Estimator


@dataclass(frozen=True)
class FilterSpec:
    """Iterated-Tikhonov filter with t steps at regularization lam."""

    steps_t: int
    lam: float
    kind: str = "tikhonov_iterated"

    def __post_init__(self) -> None:
        if self.steps_t < 1:
            raise ValueError(f"steps_t must be >= 1, got {self.steps_t}")
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.kind != "tikhonov_iterated":
            raise ValueError(f"unsupported filter kind {self.kind!r}")


def filter_value(spec: FilterSpec, sigma):
    """g(sigma), vectorized; g(0) = t/lam by continuity."""
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise ValueError("sigma must be nonnegative")
    out = np.full_like(s, spec.steps_t / spec.lam)
    positive = s > 0
    sp = s[positive]
    out[positive] = -np.expm1(-spec.steps_t * np.log1p(sp / spec.lam)) / sp
    return float(out) if np.isscalar(sigma) else out


def filter_residual(spec: FilterSpec, sigma):
    """Residual (lam/(sigma+lam))^t, the shrinkage left undone by the filter."""
    s = np.asarray(sigma, dtype=float)
    if np.any(s < 0):
        raise ValueError("sigma must be nonnegative")
    out = np.exp(-spec.steps_t * np.log1p(s / spec.lam))
    return float(out) if np.isscalar(sigma) else out


def filter_apply(spec: FilterSpec, K: KernelMatrix, y) -> Estimator:
    """Squared-loss estimator beta = (1/n) U g(Sigma/n) U' y from the cached spectrum."""
    y = np.asarray(y, dtype=float)
    if y.shape != (K.n,):
        raise ValueError(f"labels must have shape ({K.n},), got {y.shape}")
    U = K.eigenvectors
    gains = filter_value(spec, K.eigenvalues / K.n)
    beta = U @ (gains * (U.T @ y)) / K.n
    return Estimator(beta, K)


@dataclass(frozen=True)
class QualificationRow:
    lam: float
    numeric_sup: float
    analytic_bound: float
    argmax_sigma: float
    ok: bool


@dataclass(frozen=True)
class QualificationReport:
    steps_t: int
    nu: float
    rows: tuple[QualificationRow, ...]

    @property
    def all_ok(self) -> bool:
        return all(row.ok for row in self.rows)


def qualification_check(
    t: int,
    nu: float,
    lambda_grid,
    sigma_grid,
    rtol: float = 1e-12,
) -> QualificationReport:
    """Check the filter's qualification numerically against the analytic bound.

    For each lam, takes the sup over the sigma grid (plus the analytic
    maximizer nu*lam/(t-nu) when nu < t) of (lam/(sigma+lam))^t * sigma^nu and
    compares it with for nu < t the bound (nu lam / t)^nu, otherwise the
    saturated value at the grid maximum kappa.
    """
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    lambdas = np.asarray(lambda_grid, dtype=float)
    sigmas = np.asarray(sigma_grid, dtype=float)
    if lambdas.size == 0 or sigmas.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(sigmas <= 0):
        raise ValueError("sigma grid must be positive")
    kappa = float(np.max(sigmas))
    rows = []
    for lam in lambdas:
        spec = FilterSpec(steps_t=t, lam=float(lam))
        candidates = sigmas
        if nu < t:
            sigma_hat = nu * lam / (t - nu)
            if sigma_hat <= kappa:
                candidates = np.append(sigmas, sigma_hat)
        values = filter_residual(spec, candidates) * candidates**nu
        best = int(np.argmax(values))
        numeric_sup = float(values[best])
        if nu < t:
            bound = float((nu * lam / t) ** nu)
        else:
            bound = float(filter_residual(spec, kappa) * kappa**nu)
        rows.append(
            QualificationRow(
                lam=float(lam),
                numeric_sup=numeric_sup,
                analytic_bound=bound,
                argmax_sigma=float(candidates[best]),
                ok=numeric_sup <= bound * (1.0 + rtol),
            )
        )
    return QualificationReport(steps_t=t, nu=nu, rows=tuple(rows))


@dataclass(frozen=True)
class DofCurve:
    """Degrees of freedom sum_i sigma_i/(sigma_i + lam) over the empirical spectrum."""

    lambdas: np.ndarray
    dof_values: np.ndarray


def dof_curve(K: KernelMatrix, lambdas, n: int | None = None) -> DofCurve:
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(lambdas <= 0):
        raise ValueError("lambda values must be positive")
    n = K.n if n is None else n
    sig = K.eigenvalues / n
    values = np.array([float(np.sum(sig / (sig + lam))) for lam in lambdas])
    return DofCurve(lambdas=lambdas, dof_values=values)
