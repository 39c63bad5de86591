"""Grid sweeps, best-lambda selection, and log-log learning-rate fits.

A sweep cell is one (n, seed): the dataset and Gram matrix are built once, a
single proximal trajectory per lambda is run to max(t_list) steps, and every
requested t is evaluated from the stored iterates.  Records stream to the
output file as cells finish, so a partially written file is a valid prefix.
Cells are independent and may run in a process pool; identical seeds give an
identical record set regardless of worker count (up to file order).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, TextIO

import numpy as np

from .iterated_tikhonov import make_schedule, run_iterated_tikhonov
from .kernels import KernelSpec, _kernel_from_dist, gram_matrix, theta_star_eval
from .losses import LOGISTIC, LossModel, gsc_radius
from .prox_newton import SolverError
from .risk import logistic_excess_pointwise, mc_inputs, squared_excess_pointwise
from .synthetic import TaskSpec, generate

DEFAULT_LAMBDA_MIN = 1e-4
DEFAULT_LAMBDA_MAX = 1.0
DEFAULT_LAMBDA_COUNT = 50
DEFAULT_REPETITIONS = 20
DEFAULT_TARGET_EPS = 1e-4

RECORD_HEADER = "loss,r,alpha,t,n,lambda,seed,excess_risk,std_error,chosen,wall_time_ms"


def default_lambda_grid(
    lo: float = DEFAULT_LAMBDA_MIN,
    hi: float = DEFAULT_LAMBDA_MAX,
    count: int = DEFAULT_LAMBDA_COUNT,
) -> np.ndarray:
    """Log-spaced regularization grid, ascending."""
    if lo <= 0 or hi <= lo or count < 1:
        raise ValueError(f"invalid lambda grid ({lo}, {hi}, {count})")
    if count == 1:
        return np.array([lo])
    return np.geomspace(lo, hi, count)


def theoretical_rate(r: float, alpha: float, t: int) -> float:
    """Predicted excess-risk exponent alpha(1+2s)/(1+alpha(1+2s)), s = min(r, t-1/2)."""
    s = min(r, t - 0.5)
    return alpha * (1 + 2 * s) / (1 + alpha * (1 + 2 * s))


def theoretical_lambda_rate(r: float, alpha: float, t: int) -> float:
    """Predicted decay exponent of the optimal regularization in n."""
    s = min(r, t - 0.5)
    return alpha / (1 + alpha * (1 + 2 * s))


@dataclass(frozen=True)
class SweepConfig:
    """Grid sweep over sample sizes, regularizations, step counts and seeds."""

    task: TaskSpec
    n_grid: tuple[int, ...]
    t_list: tuple[int, ...]
    lambda_grid: tuple[float, ...] = tuple(default_lambda_grid())
    repetitions: int = DEFAULT_REPETITIONS
    target_eps: float = DEFAULT_TARGET_EPS
    mc_samples: int = 10_000
    mc_seed: int = 0
    output_path: str | None = None
    threads: int = 1

    def __post_init__(self) -> None:
        if not self.n_grid or not self.t_list or not self.lambda_grid:
            raise ValueError("n_grid, t_list and lambda_grid must be nonempty")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(t < 1 for t in self.t_list):
            raise ValueError("t values must be >= 1")


@dataclass(frozen=True)
class ExperimentRecord:
    """One (loss, r, alpha, t, n, lambda, seed) measurement; NaN risk marks a failed cell."""

    loss: str
    r: float
    alpha: int
    t: int
    n: int
    lam: float
    seed: int
    excess_risk: float
    std_error: float
    chosen: bool
    wall_time_ms: float

    @property
    def failed(self) -> bool:
        return not math.isfinite(self.excess_risk)

    def sort_key(self):
        return (self.loss, self.r, self.alpha, self.t, self.n, self.lam, self.seed)


def _format_record(rec: ExperimentRecord) -> str:
    return ",".join(
        (
            rec.loss,
            repr(rec.r),
            str(rec.alpha),
            str(rec.t),
            str(rec.n),
            repr(rec.lam),
            str(rec.seed),
            repr(rec.excess_risk),
            repr(rec.std_error),
            "true" if rec.chosen else "false",
            repr(rec.wall_time_ms),
        )
    )


def write_records(fh: TextIO, records: Iterable[ExperimentRecord], header: bool = True) -> None:
    if header:
        fh.write(RECORD_HEADER + "\n")
    for rec in records:
        fh.write(_format_record(rec) + "\n")
    fh.flush()


def read_records(path: str) -> list[ExperimentRecord]:
    """Parse a records file; a truncated final line (crash artifact) is ignored."""
    records: list[ExperimentRecord] = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != RECORD_HEADER:
        raise ValueError(f"{path} does not start with the records header")
    for idx, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        try:
            rec = ExperimentRecord(
                loss=parts[0],
                r=float(parts[1]),
                alpha=int(parts[2]),
                t=int(parts[3]),
                n=int(parts[4]),
                lam=float(parts[5]),
                seed=int(parts[6]),
                excess_risk=float(parts[7]),
                std_error=float(parts[8]),
                chosen=parts[9] == "true",
                wall_time_ms=float(parts[10]),
            )
        except (IndexError, ValueError) as exc:
            if idx == len(lines):
                break  # valid prefix: drop the torn last line
            raise ValueError(f"{path}:{idx}: malformed record line") from exc
        records.append(rec)
    return records


def _compute_cell(config: SweepConfig, n: int, seed: int) -> list[ExperimentRecord]:
    """All records for one (n, seed): one trajectory per lambda, all t evaluated."""
    task = replace(config.task, n=n, seed=seed)
    loss = LossModel(task.loss_kind)
    dataset = generate(task)
    spec = KernelSpec(task.alpha)
    K = gram_matrix(spec, dataset.inputs)
    radius = gsc_radius(loss, np.diag(K.entries))
    max_t = max(config.t_list)

    x_mc = mc_inputs(task.seed, config.mc_seed, config.mc_samples)
    theta_star_mc = np.asarray(theta_star_eval(task.r, task.alpha, x_mc))
    cross = _kernel_from_dist(spec.order_q, np.abs(x_mc[:, None] - dataset.inputs[None, :]))
    excess_pointwise = (
        logistic_excess_pointwise if task.loss_kind == LOGISTIC else squared_excess_pointwise
    )

    rows: list[tuple[float, int, np.ndarray | None, float]] = []  # (lam, t, beta, traj_ms)
    for lam in config.lambda_grid:
        t0 = time.perf_counter()
        beta_at_t: dict[int, np.ndarray | None] = {}
        try:
            run = make_schedule(lam, max_t, config.target_eps, radius)
            traj = run_iterated_tikhonov(loss, K, dataset.labels, run)
            for t in config.t_list:
                beta_at_t[t] = traj.iterates[t].coefficients
        except SolverError:
            for t in config.t_list:
                beta_at_t[t] = None
        share_ms = 1e3 * (time.perf_counter() - t0) / len(config.t_list)
        for t in config.t_list:
            rows.append((float(lam), t, beta_at_t[t], share_ms))

    t0 = time.perf_counter()
    records: list[ExperimentRecord] = []
    for lam, t, beta, traj_ms in rows:
        if beta is None:
            value, stderr = float("nan"), float("nan")
        else:
            pointwise = excess_pointwise(cross @ beta, theta_star_mc)
            value = float(np.mean(pointwise))
            stderr = float(np.std(pointwise, ddof=1) / np.sqrt(pointwise.size))
        records.append(
            ExperimentRecord(
                loss=task.loss_kind, r=task.r, alpha=task.alpha, t=t, n=n, lam=lam,
                seed=seed, excess_risk=value, std_error=stderr, chosen=False,
                wall_time_ms=traj_ms,
            )
        )
    risk_share = 1e3 * (time.perf_counter() - t0) / max(len(records), 1)

    final: list[ExperimentRecord] = []
    for t in config.t_list:
        group = [rec for rec in records if rec.t == t]
        best = None
        for rec in group:  # ascending lambda: <= prefers the larger lambda on ties
            if not rec.failed and (best is None or rec.excess_risk <= best.excess_risk):
                best = rec
        for rec in group:
            final.append(
                replace(rec, chosen=rec is best, wall_time_ms=rec.wall_time_ms + risk_share)
            )
    return final


def _cell_args(config: SweepConfig) -> list[tuple[int, int]]:
    return [
        (n, config.task.seed + rep)
        for n in config.n_grid
        for rep in range(config.repetitions)
    ]


def run_sweep(config: SweepConfig) -> list[ExperimentRecord]:
    """Run the full grid, streaming records to the output file as cells finish."""
    loss = LossModel(config.task.loss_kind)
    if loss.kind == LOGISTIC:
        # Fail fast: the precision rule must admit target_eps at the smallest lambda.
        spec = KernelSpec(config.task.alpha)
        diag = _kernel_from_dist(spec.order_q, np.zeros(1))
        radius = gsc_radius(loss, diag)
        make_schedule(min(config.lambda_grid), max(config.t_list), config.target_eps, radius)

    cells = _cell_args(config)
    out = open(config.output_path, "w", encoding="utf-8") if config.output_path else None
    records: list[ExperimentRecord] = []
    try:
        if out is not None:
            out.write(RECORD_HEADER + "\n")
            out.flush()
        if config.threads <= 1:
            for n, seed in cells:
                cell_records = _compute_cell(config, n, seed)
                records.extend(cell_records)
                if out is not None:
                    write_records(out, cell_records, header=False)
        else:
            with ProcessPoolExecutor(max_workers=config.threads) as pool:
                futures = [pool.submit(_compute_cell, config, n, seed) for n, seed in cells]
                for future in as_completed(futures):
                    cell_records = future.result()
                    records.extend(cell_records)
                    if out is not None:
                        write_records(out, cell_records, header=False)
    finally:
        if out is not None:
            out.close()
    return records


@dataclass(frozen=True)
class RateFit:
    """OLS slope of log excess risk against log n for one (loss, r, alpha, t) group."""

    loss: str
    r: float
    alpha: int
    t: int
    gamma_hat: float
    gamma_theory: float
    intercept: float
    residual_r2: float
    n_points: int
    n_excluded: int


def group_keys(records: Sequence[ExperimentRecord]) -> list[tuple[str, float, int, int]]:
    keys = {(rec.loss, rec.r, rec.alpha, rec.t) for rec in records if rec.chosen}
    return sorted(keys)


def fit_rate(records: Sequence[ExperimentRecord], group: tuple[str, float, int, int]) -> RateFit:
    """Fit log(excess risk) ~ log(n) over the chosen records of one group."""
    loss, r, alpha, t = group
    selected = [
        rec for rec in records
        if rec.chosen and (rec.loss, rec.r, rec.alpha, rec.t) == group and not rec.failed
    ]
    usable = [rec for rec in selected if rec.excess_risk > 0]
    excluded = len(selected) - len(usable)
    distinct_n = {rec.n for rec in usable}
    if len(distinct_n) < 3:
        raise ValueError(
            f"rate fit for {group} needs >= 3 distinct n values, got {sorted(distinct_n)}"
        )
    log_n = np.log([rec.n for rec in usable])
    log_risk = np.log([rec.excess_risk for rec in usable])
    slope, intercept = np.polyfit(log_n, log_risk, 1)
    fitted = slope * log_n + intercept
    ss_res = float(np.sum((log_risk - fitted) ** 2))
    ss_tot = float(np.sum((log_risk - np.mean(log_risk)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(
        loss=loss, r=r, alpha=alpha, t=t,
        gamma_hat=float(-slope), gamma_theory=theoretical_rate(r, alpha, t),
        intercept=float(intercept), residual_r2=r2,
        n_points=len(usable), n_excluded=excluded,
    )


def lambda_drift_slope(
    records: Sequence[ExperimentRecord], group: tuple[str, float, int, int]
) -> float:
    """OLS slope of log(chosen lambda) against log(n); negative when regularization relaxes."""
    selected = [
        rec for rec in records
        if rec.chosen and (rec.loss, rec.r, rec.alpha, rec.t) == group and not rec.failed
    ]
    if len({rec.n for rec in selected}) < 2:
        raise ValueError(f"lambda drift for {group} needs >= 2 distinct n values")
    slope, _ = np.polyfit(
        np.log([rec.n for rec in selected]), np.log([rec.lam for rec in selected]), 1
    )
    return float(slope)


def format_rate_table(fits: Sequence[RateFit]) -> str:
    lines = [
        f"{'loss':<10}{'r':>7}{'alpha':>6}{'t':>4}{'gamma_hat':>11}{'theory':>8}{'r2':>7}"
        f"{'points':>8}{'excluded':>9}"
    ]
    for fit in fits:
        lines.append(
            f"{fit.loss:<10}{fit.r:>7.3g}{fit.alpha:>6d}{fit.t:>4d}"
            f"{fit.gamma_hat:>11.4f}{fit.gamma_theory:>8.4f}{fit.residual_r2:>7.3f}"
            f"{fit.n_points:>8d}{fit.n_excluded:>9d}"
        )
    return "\n".join(lines)


def rate_table_kv(fits: Sequence[RateFit]) -> str:
    lines = []
    for fit in fits:
        prefix = f"{fit.loss}.r{fit.r!r}.alpha{fit.alpha}.t{fit.t}"
        lines.append(f"{prefix}.gamma_hat={fit.gamma_hat!r}")
        lines.append(f"{prefix}.gamma_theory={fit.gamma_theory!r}")
        lines.append(f"{prefix}.intercept={fit.intercept!r}")
        lines.append(f"{prefix}.residual_r2={fit.residual_r2!r}")
        lines.append(f"{prefix}.n_points={fit.n_points}")
        lines.append(f"{prefix}.n_excluded={fit.n_excluded}")
    return "\n".join(lines)
