"""Command-line interface: run batches, rebuild Table-style reports, replay."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import harness
from .config import load_settings
from .sim import Settings

_SEED_ENV = "CROSSWAY_SEED"


def _default_seed() -> int:
    return int(os.environ.get(_SEED_ENV, "0"))


def _load(args) -> Settings:
    if getattr(args, "config", None):
        return load_settings(args.config)
    return Settings()


def _print_stats_table(rows) -> None:
    header = ("case", "collision%", "congestion%", "avg steps", "timeouts",
              "runs")
    print(f"{header[0]:>5} {header[1]:>11} {header[2]:>12} "
          f"{header[3]:>10} {header[4]:>9} {header[5]:>6}")
    for stats in rows:
        row = stats.to_row()
        avg = row["avg_total_steps"] or "-"
        print(f"{row['case']:>5} {row['collision_rate_pct']:>11} "
              f"{row['congestion_rate_pct']:>12} {avg:>10} "
              f"{row['timeout_count']:>9} {row['runs']:>6}")


def _cmd_run(args) -> int:
    settings = _load(args)
    case = harness.normalize_case(args.case)
    stats, summaries = harness.run_batch(case, args.runs, args.seed, settings)
    _print_stats_table([stats])
    if args.out:
        harness.write_stats([stats], args.out)
        print(f"stats written to {args.out}")
    if args.summary:
        harness.write_run_summaries(summaries, args.summary)
        print(f"per-run table written to {args.summary}")
    if args.traces:
        trace_dir = Path(args.traces)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for summary in summaries:
            setup, result = harness.run_single(case, summary.run_index,
                                               args.seed, settings,
                                               record_trace=True)
            harness.write_trace(setup, result, settings,
                                trace_dir / f"run{summary.run_index:05d}.csv")
        print(f"traces written to {trace_dir}")
    if args.plot:
        from .plotting import render_run_figure

        setup, result = harness.run_single(case, args.plot_run, args.seed,
                                           settings, record_trace=True)
        render_run_figure(setup, result, settings, args.plot)
        print(f"trajectory figure written to {args.plot}")
    return 0


def _cmd_table(args) -> int:
    settings = _load(args)
    rows = []
    for case in harness.CASE_IDS:
        stats, _ = harness.run_batch(case, args.runs, args.seed, settings)
        rows.append(stats)
    _print_stats_table(rows)
    if args.out:
        harness.write_stats(rows, args.out)
        print(f"stats written to {args.out}")
    return 0


def _cmd_replay(args) -> int:
    ok, issues = harness.replay_trace(args.trace)
    if ok:
        print("consistent")
        return 0
    for issue in issues:
        print(issue)
    print(f"{len(issues)} inconsistencies found")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossway",
        description="Unsignalized-intersection decision-game simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one case's Monte Carlo batch")
    p_run.add_argument("--case", required=True,
                       help="scenario case: 1-4 or primed 1p-4p (1' works too)")
    p_run.add_argument("--runs", type=int, default=100)
    p_run.add_argument("--seed", type=int, default=_default_seed())
    p_run.add_argument("--config", help="key=value settings file")
    p_run.add_argument("--traces", help="directory for per-run trace CSVs")
    p_run.add_argument("--out", help="stats CSV path")
    p_run.add_argument("--summary", help="per-run summary CSV path")
    p_run.add_argument("--plot", help="trajectory figure path (.svg/.pdf)")
    p_run.add_argument("--plot-run", type=int, default=0,
                       help="run index rendered by --plot")
    p_run.set_defaults(func=_cmd_run)

    p_table = sub.add_parser(
        "table", help="run all eight cases and print the report")
    p_table.add_argument("--runs", type=int, default=100)
    p_table.add_argument("--seed", type=int, default=_default_seed())
    p_table.add_argument("--config", help="key=value settings file")
    p_table.add_argument("--out", help="stats CSV path")
    p_table.set_defaults(func=_cmd_table)

    p_replay = sub.add_parser("replay", help="cross-check an emitted trace")
    p_replay.add_argument("--trace", required=True)
    p_replay.set_defaults(func=_cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
