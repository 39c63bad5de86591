"""Synthetic benchmarks with planted source/capacity parameters.

Inputs are uniform on [0,1] and the optimum is the kernel slice
theta*(x) = K_{q*}(0, x) with q* = (r+1/2)*alpha + 1/2.  Classification labels
are +1 with probability sigmoid(theta*(x)), which makes theta* the pointwise
minimizer of the logistic risk; regression adds Gaussian noise, which does the
same for squared loss.

Randomness is drawn from the counter-based Philox generator, seeded through
numpy SeedSequence with fixed stream indices so datasets are bit-reproducible
independent of any parallel schedule:

    spawn_key (0,)            inputs
    spawn_key (1,)            labels
    spawn_key (2,)            regression noise
    spawn_key (3, mc_seed)    Monte Carlo evaluation inputs (see risk module)
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .kernels import smoothness_order, theta_star_eval
from .losses import LOGISTIC, SQUARED

STREAM_INPUTS = 0
STREAM_LABELS = 1
STREAM_NOISE = 2
STREAM_MC = 3

_META_SUFFIX = ".meta"


def substream(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for one named substream of a dataset seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=key)))


@dataclass(frozen=True)
class TaskSpec:
    """One synthetic task: loss kind, planted (r, alpha), size, seed, noise level."""

    loss_kind: str
    r: float
    alpha: int
    n: int
    seed: int
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.loss_kind not in (LOGISTIC, SQUARED):
            raise ValueError(f"unknown loss kind {self.loss_kind!r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        smoothness_order(self.r, self.alpha)  # validates the (r, alpha) combination

    @property
    def theta_star_order(self) -> int:
        return smoothness_order(self.r, self.alpha)


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    theta_star_values: np.ndarray
    spec: TaskSpec


def generate_classification(spec: TaskSpec) -> Dataset:
    """Binary labels: +1 with probability sigmoid(theta*(x)), else -1."""
    if spec.loss_kind != LOGISTIC:
        raise ValueError(f"classification requires the logistic loss, got {spec.loss_kind!r}")
    x = substream(spec.seed, STREAM_INPUTS).random(spec.n)
    theta = theta_star_eval(spec.r, spec.alpha, x)
    u = substream(spec.seed, STREAM_LABELS).random(spec.n)
    y = np.where(u < expit(theta), 1.0, -1.0)
    return Dataset(inputs=x, labels=y, theta_star_values=np.asarray(theta), spec=spec)


def generate_regression(spec: TaskSpec) -> Dataset:
    """Real labels: theta*(x) plus centered Gaussian noise of the configured scale."""
    if spec.loss_kind != SQUARED:
        raise ValueError(f"regression requires the squared loss, got {spec.loss_kind!r}")
    x = substream(spec.seed, STREAM_INPUTS).random(spec.n)
    theta = np.asarray(theta_star_eval(spec.r, spec.alpha, x))
    noise = substream(spec.seed, STREAM_NOISE).standard_normal(spec.n)
    y = theta + spec.noise_sigma * noise
    return Dataset(inputs=x, labels=y, theta_star_values=theta, spec=spec)


def generate(spec: TaskSpec) -> Dataset:
    if spec.loss_kind == LOGISTIC:
        return generate_classification(spec)
    return generate_regression(spec)


def pointwise_risk_argmin(theta_star_value: float, max_iter: int = 200) -> float:
    """Minimize z -> a log(1+e^{-z}) + (1-a) log(1+e^{z}), a = sigmoid(theta*), by 1-d Newton.

    The gradient simplifies to sigmoid(z) - a, the curvature to
    sigmoid(z) sigmoid(-z); convergence is declared when the step stalls.
    """
    a = expit(theta_star_value)
    z = 0.0
    for _ in range(max_iter):
        grad = expit(z) - a
        curv = expit(z) * expit(-z)
        if curv == 0.0:
            break
        step = grad / curv
        z -= step
        if abs(step) <= 1e-14 * max(1.0, abs(z)):
            break
    return z


@dataclass(frozen=True)
class OptimalityReport:
    probes: np.ndarray
    argmins: np.ndarray
    deviations: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations))


def verify_optimality(spec: TaskSpec, x_probe) -> OptimalityReport:
    """Check numerically that theta* minimizes the pointwise conditional risk."""
    if spec.loss_kind != LOGISTIC:
        raise ValueError("optimality verification is defined for the logistic task")
    probes = np.atleast_1d(np.asarray(x_probe, dtype=float))
    theta = np.asarray(theta_star_eval(spec.r, spec.alpha, probes))
    argmins = np.array([pointwise_risk_argmin(v) for v in theta])
    return OptimalityReport(probes=probes, argmins=argmins, deviations=np.abs(argmins - theta))


def save_dataset(dataset: Dataset, path: str | os.PathLike) -> None:
    """Write the samples as x,y,theta_star text plus a key-value metadata file."""
    path = os.fspath(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,theta_star\n")
        for x, y, th in zip(dataset.inputs, dataset.labels, dataset.theta_star_values):
            fh.write(f"{x!r},{y!r},{th!r}\n")
    spec = dataset.spec
    with open(path + _META_SUFFIX, "w", encoding="utf-8") as fh:
        fh.write(f"loss={spec.loss_kind}\n")
        fh.write(f"r={spec.r!r}\n")
        fh.write(f"alpha={spec.alpha}\n")
        fh.write(f"n={spec.n}\n")
        fh.write(f"seed={spec.seed}\n")
        fh.write(f"noise_sigma={spec.noise_sigma!r}\n")
        fh.write(f"theta_star_order={spec.theta_star_order}\n")


def load_dataset(path: str | os.PathLike) -> Dataset:
    path = os.fspath(path)
    meta: dict[str, str] = {}
    with open(path + _META_SUFFIX, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, value = line.partition("=")
                meta[key] = value
    spec = TaskSpec(
        loss_kind=meta["loss"],
        r=float(meta["r"]),
        alpha=int(meta["alpha"]),
        n=int(meta["n"]),
        seed=int(meta["seed"]),
        noise_sigma=float(meta.get("noise_sigma", "0.0")),
    )
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.shape != (spec.n, 3):
        raise ValueError(f"dataset shape {rows.shape} does not match metadata n={spec.n}")
    return Dataset(inputs=rows[:, 0], labels=rows[:, 1], theta_star_values=rows[:, 2], spec=spec)
