"""Command line interface.

Three subcommands: `run` executes a single configured optimization run and
writes a metrics CSV, `sweep` runs an interpolation-factor-by-seed grid with
per-run CSVs plus aggregates, and `verify` executes the acceptance checks.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from . import verification
from .dataio import (RunConfig, load_config, load_dataset, parse_override,
                     rows_from_trajectory, write_metrics)
from .diagnostics import aggregate_seeds, convergence_report
from .neural import MlpModel, as_oracle
from .optimizer_core import DivergenceError, make_config, run_experiment
from .problems import make_problem
from .schedules import ScheduleSpec, iterations_for


class CliError(Exception):
    """User-facing failure: printed to stderr, nonzero exit, no traceback."""


def _load_train(cfg: RunConfig):
    missing = [key for key, val in (("data.train_images", cfg.train_images),
                                    ("data.train_labels", cfg.train_labels)) if val is None]
    if missing:
        raise CliError("mnist_mlp requires training data paths; set "
                       + " and ".join(missing) + " in the config or via --set")
    return load_dataset(cfg.train_images, cfg.train_labels)


def execute_run(cfg: RunConfig, lam: float, seed: int):
    """Build the oracle and schedule from a config and run once.

    Returns (run_id, RunResult). Shared by `run` and the sweep workers so
    a sweep cell is bit-identical to the equivalent single run.
    """
    mcfg = make_config(cfg.mu, lam)
    if cfg.kind == "mnist_mlp":
        train = _load_train(cfg)
        model = MlpModel([train.inputs.shape[1], *cfg.hidden, 10], seed=seed)
        oracle = as_oracle(model, train, cfg.batch, seed=seed, mode=cfg.batch_mode)
        horizon = iterations_for(len(train), cfg.batch, cfg.epochs)
    else:
        oracle = make_problem(cfg.kind, cfg.dim, cfg.condition_number,
                              cfg.noise_radius, cfg.problem_seed)
        horizon = cfg.steps
    K = cfg.K if cfg.K is not None else int(cfg.K_frac * horizon)
    schedule = ScheduleSpec(alpha=cfg.alpha, K=K, p=cfg.p)
    run_id = f"{cfg.kind}-{cfg.formulation}-lam{lam:g}-seed{seed}"
    result = run_experiment(oracle, mcfg, schedule, horizon, cfg.output_mode,
                            seed, cfg.formulation)
    return run_id, result


def cmd_run(args) -> int:
    overrides = {}
    for item in args.set or []:
        key, value = parse_override(item)
        overrides[key] = value
    cfg = load_config(args.config, overrides or None)
    out = args.out or cfg.out_path
    if out is None:
        raise CliError("no output path; pass --out or set output.path in the config")
    run_id, result = execute_run(cfg, cfg.lam, args.seed)
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_metrics(rows_from_trajectory(run_id, result.trajectory), out_path)
    traj = result.trajectory
    report = convergence_report([traj])
    print(f"run {run_id}: {len(traj)} steps, output mode {cfg.output_mode} "
          f"-> index {result.output_index}")
    print(f"final full loss {traj.full_loss[-1]:.6g}, "
          f"final grad norm {traj.grad_norm[-1]:.6g}")
    print(f"grad norm squared over checkpoints: last {report.last_sq:.6g}, "
          f"min {report.min_sq:.6g}, avg {report.avg_sq:.6g}")
    print(f"wrote {out_path}")
    return 0


def _parse_lambdas(text: str) -> list:
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        try:
            out.append(float(piece))
        except ValueError:
            raise CliError(f"--lambdas expects comma separated numbers, got {piece!r}")
    if not out:
        raise CliError("--lambdas produced an empty list")
    return out


def _sweep_task(cfg: RunConfig, lam: float, seed: int):
    return execute_run(cfg, lam, seed)


def _write_aggregate(path, trajectories) -> None:
    full_loss = aggregate_seeds(trajectories, "full_loss")
    grad_norm = aggregate_seeds(trajectories, "grad_norm")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "full_loss_mean", "full_loss_std",
                         "grad_norm_mean", "grad_norm_std"])
        for i, t in enumerate(grad_norm.t):
            writer.writerow([int(t),
                             repr(float(full_loss.mean[i])), repr(float(full_loss.std[i])),
                             repr(float(grad_norm.mean[i])), repr(float(grad_norm.std[i]))])


def cmd_sweep(args) -> int:
    overrides = {}
    for item in args.set or []:
        key, value = parse_override(item)
        overrides[key] = value
    cfg = load_config(args.config, overrides or None)
    lambdas = _parse_lambdas(args.lambdas)
    if args.seeds < 1:
        raise CliError(f"--seeds must be >= 1, got {args.seeds}")
    # reject every out-of-range interpolation factor before any work starts
    bad = []
    for lam in lambdas:
        try:
            make_config(cfg.mu, lam)
        except ValueError as exc:
            bad.append(f"lambda={lam:g}: {exc}")
    if bad:
        raise CliError("sweep rejected before any run:\n  " + "\n  ".join(bad))

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cells = [(lam, seed) for lam in lambdas for seed in range(args.seeds)]
    results = {}
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_sweep_task, cfg, lam, seed): (lam, seed)
                       for lam, seed in cells}
            for fut in as_completed(futures):
                results[futures[fut]] = fut.result()
    else:
        for lam, seed in cells:
            results[(lam, seed)] = _sweep_task(cfg, lam, seed)

    summary_lines = []
    for lam in lambdas:
        trajectories = []
        for seed in range(args.seeds):
            run_id, result = results[(lam, seed)]
            write_metrics(rows_from_trajectory(run_id, result.trajectory),
                          out_dir / f"{run_id}.csv")
            trajectories.append(result.trajectory)
        _write_aggregate(out_dir / f"aggregate-lam{lam:g}.csv", trajectories)
        mean_loss = float(np.mean([tr.full_loss[-1] for tr in trajectories]))
        mean_norm = float(np.mean([tr.grad_norm[-1] for tr in trajectories]))
        summary_lines.append(f"lambda={lam:g}: seeds={args.seeds}, "
                             f"mean final full loss {mean_loss:.6g}, "
                             f"mean final grad norm {mean_norm:.6g}")
    (out_dir / "sweep-summary.txt").write_text("\n".join(summary_lines) + "\n")
    for line in summary_lines:
        print(line)
    print(f"wrote {len(cells)} run files and {len(lambdas)} aggregates under {out_dir}")
    return 0


def cmd_verify(args) -> int:
    results = verification.run_all(args.scope, args.data_dir)
    width = max(len(r.name) for r in results)
    n_pass = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.detail}")
        n_pass += int(r.passed)
    print(f"{n_pass}/{len(results)} checks passed")
    return 0 if n_pass == len(results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sumopt",
        description="momentum-interpolation optimizer experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one run and write a metrics CSV")
    p_run.add_argument("--config", required=True, help="TOML run configuration")
    p_run.add_argument("--out", default=None,
                       help="metrics CSV path (defaults to output.path from the config)")
    p_run.add_argument("--seed", type=int, required=True)
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key, repeatable")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run an interpolation-factor x seed grid")
    p_sweep.add_argument("--config", required=True, help="TOML run configuration")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--lambdas", required=True,
                         help="comma separated interpolation factors")
    p_sweep.add_argument("--seeds", type=int, required=True,
                         help="number of seeds, used as 0..N-1")
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="parallel worker processes (default 1)")
    p_sweep.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="override a config key, repeatable")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the acceptance checks")
    p_verify.add_argument("--scope", choices=("fast", "full"), default="fast")
    p_verify.add_argument("--data-dir", default=None,
                          help="directory holding the IDX digit files (full scope)")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc} Reduce schedule.alpha or the interpolation factor.",
              file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
