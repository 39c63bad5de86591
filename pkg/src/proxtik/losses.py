"""Scalar loss models (logistic, squared) with derivatives and self-concordance metadata.

Everything here is stateless and vectorized over numpy arrays; the logistic
branch never exponentiates a positive argument, so evaluation is overflow-free
for |z| up to ~700.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

LOGISTIC = "logistic"
SQUARED = "squared"
_KINDS = (LOGISTIC, SQUARED)


@dataclass(frozen=True)
class LossModel:
    """A convex scalar loss, three times differentiable in the prediction argument."""

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}; expected one of {_KINDS}")

    @property
    def label_space(self) -> str:
        return "binary" if self.kind == LOGISTIC else "real"

    @property
    def is_quadratic(self) -> bool:
        return self.kind == SQUARED


@dataclass(frozen=True)
class GscRadius:
    """Uniform bound R on the norm of the self-concordance directions.

    Quadratic losses have R = 0, which makes every bound involving 1/R vacuous.
    """

    value: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.value) or self.value < 0:
            raise ValueError(f"radius must be a finite nonnegative scalar, got {self.value}")


def validate_labels(model: LossModel, y: np.ndarray) -> np.ndarray:
    """Check labels against the model's label space and return them as float64."""
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("labels must be finite")
    if model.kind == LOGISTIC:
        bad = ~np.isin(y, (-1.0, 1.0))
        if np.any(bad):
            offenders = np.unique(y[bad])[:5]
            raise ValueError(
                "logistic labels must be -1 or +1 (0/1 encoding is rejected); "
                f"got values {offenders.tolist()}"
            )
    return y


def loss_value(model: LossModel, y, z):
    """Pointwise loss: log(1 + exp(-y*z)) for logistic, (y - z)^2 / 2 for squared."""
    y = validate_labels(model, y)
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("predictions must be finite")
    if model.kind == LOGISTIC:
        return np.logaddexp(0.0, -y * z)
    return 0.5 * (y - z) ** 2


def loss_derivatives(model: LossModel, y, z):
    """First three derivatives of the loss in the prediction argument.

    Returns (d1, d2, d3), each with the broadcast shape of (y, z).  The
    logistic branch uses paired sigmoids so that d2 = s(1-s) and
    d3 = y*d2*(sigma(-yz) - sigma(yz)) stay accurate in the tails.
    """
    y = validate_labels(model, y)
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("predictions must be finite")
    if model.kind == SQUARED:
        d1 = z - y
        d2 = np.ones_like(d1)
        d3 = np.zeros_like(d1)
        return d1, d2, d3
    m = y * z
    s_pos = expit(m)
    s_neg = expit(-m)
    d1 = -y * s_neg
    d2 = s_pos * s_neg
    d3 = y * d2 * (s_neg - s_pos)
    return d1, d2, d3


def gsc_radius(model: LossModel, kernel_diag) -> GscRadius:
    """Radius bound from the kernel diagonal: max_i sqrt(K(x_i, x_i)) for logistic, 0 for squared."""
    diag = np.asarray(kernel_diag, dtype=float)
    if diag.size == 0:
        raise ValueError("kernel diagonal is empty")
    if np.any(diag < 0):
        raise ValueError("kernel diagonal entries must be nonnegative")
    if model.kind == SQUARED:
        return GscRadius(0.0)
    return GscRadius(float(np.sqrt(np.max(diag))))
