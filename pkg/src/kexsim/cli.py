"""Command-line interface: clear, estimate, weights, simulate, experiment, report."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .btmodel import fit_attribute, fit_direct, read_comparisons_csv, win_matrix, write_scores_json
from .clearing import ClearingMode, clear
from .experiments import (
    experiment_spec_from_dict,
    render_summary_table,
    run_experiment,
    write_raw_csv,
    write_summary_csv,
)
from .graph import load_graph
from .simulator import config_from_dict, run_simulation
from .weights import Transform, WeightVector, load_weight_map, monotone_transform, rank_linear


def _cmd_clear(args: argparse.Namespace) -> int:
    graph = load_graph(args.graph)
    weights = load_weight_map(args.weights) if args.weights else None
    result = clear(
        graph,
        cycle_cap=args.cycle_cap,
        chain_cap=args.chain_cap,
        weights=weights,
        mode=ClearingMode(args.mode),
    )
    json.dump(result.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    records = read_comparisons_csv(args.comparisons)
    if args.model == "direct":
        scores = fit_direct(win_matrix(records))
        write_scores_json(scores, args.out)
    else:
        model = fit_attribute(records)
        write_scores_json(
            model.derived_scores,
            args.out,
            extra={"betas": model.betas, "separated": model.separated},
        )
    return 0


def _cmd_weights(args: argparse.Namespace) -> int:
    scores = load_weight_map(args.scores)
    transform = Transform(args.transform)
    if transform is Transform.RANK:
        vector = rank_linear(scores, top=args.top, step=args.step)
    else:
        vector = monotone_transform(scores, transform)
    Path(args.out).write_text(json.dumps(vector.to_json_dict(), indent=2) + "\n")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = config_from_dict(json.loads(Path(args.config).read_text()))
    trace_rows = []
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "mode", "profile", "blood_class", "entered", "matched"])
        for run in range(args.runs):
            metrics = run_simulation(replace(config, seed=config.seed + run))
            for (pid, bclass), counts in sorted(
                metrics.cells.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
            ):
                writer.writerow(
                    [run, config.mode.value, pid, bclass.value, counts.entered, counts.matched]
                )
            if args.trace:
                trace_rows.extend(
                    [run, t.day, t.pool_size, t.matched_today] for t in metrics.trace
                )
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["run", "day", "pool_size", "matched_today"])
            writer.writerows(trace_rows)
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    spec = experiment_spec_from_dict(json.loads(Path(args.spec).read_text()))
    result = run_experiment(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_raw_csv(result.raw_rows, out_dir / "raw.csv")
    write_summary_csv(result.summary, out_dir / "summary.csv")
    print(f"wrote {out_dir / 'raw.csv'} and {out_dir / 'summary.csv'}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    print(render_summary_table(args.summary))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kexsim",
        description="Kidney exchange clearing, profile score estimation, and matching simulation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clear", help="solve one compatibility graph")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--cycle-cap", type=int, default=3)
    p.add_argument("--chain-cap", type=int, default=0)
    p.add_argument("--weights", help="weights JSON (profile id -> weight)")
    p.add_argument("--mode", choices=["standard", "prioritized"], default="standard")
    p.set_defaults(func=_cmd_clear)

    p = sub.add_parser("estimate", help="fit profile scores from comparisons CSV")
    p.add_argument("--comparisons", required=True)
    p.add_argument("--model", choices=["direct", "attribute"], default="direct")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("weights", help="derive a weight vector from scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--transform", choices=[t.value for t in Transform], default="identity")
    p.add_argument("--top", type=float, default=1.0)
    p.add_argument("--step", type=float, default=0.001)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_weights)

    p = sub.add_parser("simulate", help="run daily matching simulations")
    p.add_argument("--config", required=True, help="SimulationConfig JSON")
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--out", required=True, help="per-run outcome CSV")
    p.add_argument("--trace", help="optional per-day trace CSV")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="run a multi-arm ensemble experiment")
    p.add_argument("--spec", required=True, help="ExperimentSpec JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("report", help="render a summary CSV as a text table")
    p.add_argument("summary", help="summary.csv produced by the experiment command")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
