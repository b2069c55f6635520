"""Batch experiment front door.

``frontflow run config.toml`` executes one run and leaves a
self-describing directory behind: the fully-resolved config, per-epoch
metrics as CSV, population snapshots as JSON lines, an optional SVG
scatter plot, and a free-form log.  ``plot`` re-renders the scatter from a
finished run directory without recomputing anything; ``front`` exports a
reference-front sample.

Exit codes: 0 success, 2 configuration error, 3 runtime/numeric error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import RunConfig, parse_config, serialize_config
from .dynamics import RunRecord, run_baseline, run_particle_wfr
from .errors import ConfigError, FrontflowError, RunAborted
from .plotting import render_scatter
from .problems import get_problem, reference_front, save_front
from .errors import UnsupportedProblemError

METRICS_SCHEMA = "# frontflow metrics schema 1"
METRICS_HEADER = "epoch,energy,hv,gd,igd,births,deaths,wall_ms"


def _fmt9(v) -> str:
    return "%.9g" % float(v)


def _write_metrics(path: Path, record: RunRecord, wall_ms_per_epoch: float) -> None:
    with open(path, "w") as fh:
        fh.write(METRICS_SCHEMA + "\n")
        fh.write(METRICS_HEADER + "\n")
        for i, epoch in enumerate(record.epochs):
            fh.write(
                ",".join(
                    [
                        str(int(epoch)),
                        _fmt9(record.energy[i]),
                        _fmt9(record.hv[i]),
                        _fmt9(record.gd[i]),
                        _fmt9(record.igd[i]),
                        str(int(record.births[i])),
                        str(int(record.deaths[i])),
                        _fmt9(wall_ms_per_epoch),
                    ]
                )
                + "\n"
            )


def _write_snapshots(path: Path, record: RunRecord) -> None:
    with open(path, "w") as fh:
        for snap in record.snapshots:
            fh.write(
                json.dumps(
                    {
                        "epoch": int(snap.epoch),
                        "x": snap.positions.tolist(),
                        "f": snap.objectives.tolist(),
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def execute_run(cfg: RunConfig, timings: bool = False) -> int:
    """Run one experiment and persist its artifacts; returns the exit code.

    ``timings`` switches the metrics wall_ms column from its deterministic
    default (0, keeping reruns byte-identical) to measured wall time
    averaged per epoch; the total always goes to run.log.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(serialize_config(cfg))
    log_path = out / "run.log"

    problem = get_problem(cfg.problem_name)
    reference = None
    try:
        reference = reference_front(problem, cfg.metrics.front_n)
    except UnsupportedProblemError:
        pass

    record = None
    status = 0
    t0 = time.perf_counter()
    try:
        if cfg.baseline:
            record = run_baseline(problem, cfg.baseline, cfg.schedule, cfg.metrics, reference)
        else:
            record = run_particle_wfr(problem, cfg.schedule, cfg.metrics, reference)
    except RunAborted as exc:
        record = exc.record
        status = 3
        with open(log_path, "a") as fh:
            fh.write(f"error: aborted at epoch {exc.epoch}: {exc.cause!r}\n")
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    n_rows = max(len(record.epochs), 1)
    wall_per_epoch = elapsed_ms / n_rows if timings else 0.0
    _write_metrics(out / "metrics.csv", record, wall_per_epoch)
    _write_snapshots(out / "snapshots.jsonl", record)

    if cfg.plot and status == 0 and reference is not None and problem.m in (2, 3):
        render_scatter(record.snapshots[-1], reference, out / "front.svg")

    with open(log_path, "a") as fh:
        fh.write(
            f"run problem={cfg.problem_name} seed={cfg.schedule.seed} "
            f"particles={cfg.n_particles} epochs={cfg.schedule.total_epochs} "
            f"baseline={cfg.baseline or 'none'} status={status} wall_ms={elapsed_ms:.1f}\n"
        )
    return status


def _cmd_run(args) -> int:
    text = Path(args.config).read_text()
    cfg = parse_config(text)
    if args.seed is not None:
        cfg = replace(cfg, schedule=replace(cfg.schedule, seed=args.seed))
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    if args.baseline is not None:
        if cfg.baseline != args.baseline:
            cfg = replace(cfg, baseline=args.baseline)
    if args.no_plot:
        cfg = replace(cfg, plot=False)
    return execute_run(cfg, timings=args.timings)


def _cmd_plot(args) -> int:
    run_dir = Path(args.run_dir)
    cfg = parse_config((run_dir / "config.resolved").read_text())
    snaps = [json.loads(line) for line in (run_dir / "snapshots.jsonl").read_text().splitlines() if line]
    if not snaps:
        raise ConfigError(f"no snapshots in {run_dir}")
    if args.epoch is None:
        snap = snaps[-1]
    else:
        by_epoch = {s["epoch"]: s for s in snaps}
        if args.epoch not in by_epoch:
            raise ConfigError(
                f"no snapshot at epoch {args.epoch}; available: {sorted(by_epoch)}"
            )
        snap = by_epoch[args.epoch]
    problem = get_problem(cfg.problem_name)
    front = reference_front(problem, cfg.metrics.front_n)
    import numpy as np

    render_scatter(np.asarray(snap["f"], dtype=float), front, run_dir / "front.svg")
    return 0


def _cmd_front(args) -> int:
    front = reference_front(args.problem, args.n)
    save_front(front, Path(args.out), args.problem, args.n)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frontflow", description=__doc__)
    parser.add_argument("--version", action="version", version=f"frontflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a run described by a config file")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="override the output directory")
    p_run.add_argument("--baseline", choices=("weighted_sum", "langevin_only", "mgda_only"), default=None)
    p_run.add_argument("--no-plot", action="store_true")
    p_run.add_argument(
        "--timings",
        action="store_true",
        help="record measured wall time in metrics.csv (breaks byte-reproducibility)",
    )
    p_run.set_defaults(func=_cmd_run)

    p_plot = sub.add_parser("plot", help="re-render the scatter plot of a finished run")
    p_plot.add_argument("run_dir")
    p_plot.add_argument("--epoch", type=int, default=None)
    p_plot.set_defaults(func=_cmd_plot)

    p_front = sub.add_parser("front", help="export a reference-front sample")
    p_front.add_argument("problem")
    p_front.add_argument("--n", type=int, default=1000)
    p_front.add_argument("--out", required=True)
    p_front.set_defaults(func=_cmd_front)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FrontflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
