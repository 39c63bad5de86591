"""Command-line interface.

Subcommands: generate (dataset files), fit (single run), sweep (grid to a
records file), rate (records file to a rate table), oracle-check (prox path vs
spectral filter on squared loss), qualification (filter residual report).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness, risk, spectral, synthetic
from .iterated_tikhonov import make_schedule, run_iterated_tikhonov
from .kernels import KernelSpec, gram_matrix
from .losses import LOGISTIC, SQUARED, LossModel, gsc_radius


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_task_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--loss", choices=(LOGISTIC, SQUARED), required=True)
    p.add_argument("--r", type=float, required=True, help="source-condition parameter")
    p.add_argument("--alpha", type=int, required=True, help="capacity parameter (even integer)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.3, help="regression noise scale")


def _add_lambda_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-min", type=float, default=harness.DEFAULT_LAMBDA_MIN)
    p.add_argument("--lambda-max", type=float, default=harness.DEFAULT_LAMBDA_MAX)
    p.add_argument("--lambda-count", type=int, default=harness.DEFAULT_LAMBDA_COUNT)


def _task(args, n: int) -> synthetic.TaskSpec:
    noise = args.noise_sigma if args.loss == SQUARED else 0.0
    return synthetic.TaskSpec(
        loss_kind=args.loss, r=args.r, alpha=args.alpha, n=n, seed=args.seed, noise_sigma=noise
    )


def _cmd_generate(args) -> int:
    dataset = synthetic.generate(_task(args, args.n))
    synthetic.save_dataset(dataset, args.out)
    print(f"wrote {args.n} samples to {args.out} (+{synthetic._META_SUFFIX})")
    return 0


def _cmd_fit(args) -> int:
    task = _task(args, args.n)
    dataset = synthetic.generate(task)
    loss = LossModel(task.loss_kind)
    spec = KernelSpec(task.alpha)
    K = gram_matrix(spec, dataset.inputs)
    radius = gsc_radius(loss, np.diag(K.entries))
    config = make_schedule(args.lam, args.t, args.eps, radius)
    trajectory = run_iterated_tikhonov(loss, K, dataset.labels, config)
    est = trajectory.final
    risk_fn = risk.excess_risk_logistic if args.loss == LOGISTIC else risk.excess_risk_squared
    estimate = risk_fn(est, spec, dataset.inputs, task, args.mc_samples, args.mc_seed)
    print(f"excess_risk={estimate.value!r} std_error={estimate.std_error!r} "
          f"mc_samples={estimate.mc_samples}")
    print(f"achieved_decrements={trajectory.achieved_decrements.tolist()}")
    print("coefficients:")
    for value in est.coefficients:
        print(repr(value))
    return 0


def _cmd_sweep(args) -> int:
    grid = harness.default_lambda_grid(args.lambda_min, args.lambda_max, args.lambda_count)
    config = harness.SweepConfig(
        task=_task(args, max(args.n_grid)),
        n_grid=tuple(args.n_grid),
        t_list=tuple(args.t_list),
        lambda_grid=tuple(grid),
        repetitions=args.reps,
        target_eps=args.eps,
        mc_samples=args.mc_samples,
        mc_seed=args.mc_seed,
        output_path=args.out,
        threads=args.threads,
    )
    records = harness.run_sweep(config)
    failed = sum(rec.failed for rec in records)
    print(f"wrote {len(records)} records to {args.out} ({failed} failed cells)")
    return 0


def _cmd_rate(args) -> int:
    records = harness.read_records(args.records)
    fits = [harness.fit_rate(records, key) for key in harness.group_keys(records)]
    print(harness.format_rate_table(fits))
    for key in harness.group_keys(records):
        loss, r, alpha, t = key
        try:
            drift = harness.lambda_drift_slope(records, key)
        except ValueError:
            continue
        theory = -harness.theoretical_lambda_rate(r, alpha, t)
        print(f"lambda drift {key}: slope={drift:.4f} (theory {theory:.4f})")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(harness.rate_table_kv(fits) + "\n")
        print(f"wrote rate table to {args.out}")
    return 0


def _cmd_oracle_check(args) -> int:
    task = synthetic.TaskSpec(
        loss_kind=SQUARED, r=args.r, alpha=args.alpha, n=args.n, seed=args.seed,
        noise_sigma=args.noise_sigma,
    )
    dataset = synthetic.generate(task)
    loss = LossModel(SQUARED)
    spec = KernelSpec(task.alpha)
    K = gram_matrix(spec, dataset.inputs)
    radius = gsc_radius(loss, np.diag(K.entries))
    grid = harness.default_lambda_grid(args.lambda_min, args.lambda_max, args.lambda_count)
    worst = 0.0
    for lam in grid:
        config = make_schedule(float(lam), max(args.t_list), args.eps, radius)
        trajectory = run_iterated_tikhonov(loss, K, dataset.labels, config)
        for t in args.t_list:
            oracle = spectral.filter_apply(spectral.FilterSpec(t, float(lam)), K, dataset.labels)
            prox_beta = trajectory.iterates[t].coefficients
            scale = np.linalg.norm(oracle.coefficients)
            err = np.linalg.norm(prox_beta - oracle.coefficients) / max(scale, 1e-300)
            worst = max(worst, err)
            status = "ok" if err <= args.rtol else "FAIL"
            print(f"lambda={lam:.6g} t={t}: relative_l2={err:.3e} [{status}]")
    print(f"worst relative_l2={worst:.3e} tolerance={args.rtol:.1e}")
    return 0 if worst <= args.rtol else 1


def _cmd_qualification(args) -> int:
    grid = harness.default_lambda_grid(args.lambda_min, args.lambda_max, args.lambda_count)
    sigmas = np.linspace(args.sigma_max / args.sigma_count, args.sigma_max, args.sigma_count)
    bad = 0
    for t in args.t_list:
        for nu in args.nu_list:
            report = spectral.qualification_check(t, nu, grid, sigmas)
            for row in report.rows:
                status = "ok" if row.ok else "VIOLATION"
                print(
                    f"t={t} nu={nu:.3g} lambda={row.lam:.6g}: "
                    f"sup={row.numeric_sup:.6e} bound={row.analytic_bound:.6e} "
                    f"argmax={row.argmax_sigma:.4g} [{status}]"
                )
                bad += not row.ok
    print(f"{bad} violations")
    return 0 if bad == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proxtik")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a synthetic dataset file")
    _add_task_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("fit", help="single (lambda, t) run: print coefficients and risk")
    _add_task_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--eps", type=float, default=harness.DEFAULT_TARGET_EPS)
    p.add_argument("--mc-samples", type=int, default=risk.DEFAULT_MC_SAMPLES)
    p.add_argument("--mc-seed", type=int, default=0)
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("sweep", help="full grid sweep to a records file")
    _add_task_args(p)
    p.add_argument("--n-grid", type=_parse_int_list, required=True)
    p.add_argument("--t-list", type=_parse_int_list, required=True)
    _add_lambda_args(p)
    p.add_argument("--reps", type=int, default=harness.DEFAULT_REPETITIONS)
    p.add_argument("--eps", type=float, default=harness.DEFAULT_TARGET_EPS)
    p.add_argument("--mc-samples", type=int, default=risk.DEFAULT_MC_SAMPLES)
    p.add_argument("--mc-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("rate", help="rate table from a records file")
    p.add_argument("--records", required=True)
    p.add_argument("--out", help="write a machine-readable key-value rate table here")
    p.set_defaults(fn=_cmd_rate)

    p = sub.add_parser("oracle-check", help="squared-loss prox path vs spectral filter")
    p.add_argument("--r", type=float, default=0.25)
    p.add_argument("--alpha", type=int, default=2)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.3)
    p.add_argument("--t-list", type=_parse_int_list, default=(1, 3, 8))
    _add_lambda_args(p)
    p.add_argument("--eps", type=float, default=1e-10)
    p.add_argument("--rtol", type=float, default=1e-6)
    p.set_defaults(fn=_cmd_oracle_check)

    p = sub.add_parser("qualification", help="filter residual bound report")
    p.add_argument("--t-list", type=_parse_int_list, default=(1, 2, 4, 8))
    p.add_argument("--nu-list", type=_parse_float_list, default=(0.5, 1.0, 1.5, 3.5, 7.5))
    _add_lambda_args(p)
    p.add_argument("--sigma-count", type=int, default=100_000)
    p.add_argument("--sigma-max", type=float, default=1.0)
    p.set_defaults(fn=_cmd_qualification)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
