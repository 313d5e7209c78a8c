"""Command-line front end.

Subcommands: score (build a score file from categorical CSV data), learn
(solve one score file), oracle (cross-check the solver against exhaustive
enumeration), bench (run a directory of score files across configs) and
gen (write random score files for benchmarking).

Exit codes are a stable contract: 0 success/proven optimum, 2 solve ended
by a limit, 1 usage or input errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import solver as solver_mod
from .generate import random_score_table, seed_from_env
from .model import to_dot
from .report import (
    BENCH_HEADERS,
    RunReport,
    bench_error_row,
    bench_row,
    instances_from_name,
    render_trace_figure,
    to_json,
    write_trace_csv,
)
from .scores import (
    DataFormatError,
    ScoreFileError,
    build_score_table,
    load_csv,
    parse_score_file,
    write_score_file,
)
from .solver import NoFeasibleDagError, SolveConfig

CONFIG_PRESETS = {
    "default": {},
    "no-cycle-cuts": {"use_cycle_cuts": False},
    "no-gomory": {"use_gomory": False},
    "no-heuristic": {"use_heuristic": False},
    "restart": {"mode": "restart"},
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default, which collides with the
    # exit-code contract (2 = limit-terminated solve)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _config_from_args(args) -> SolveConfig:
    return SolveConfig(
        mode=args.mode.replace("-", "_"),
        use_cycle_cuts=not args.no_cycle_cuts,
        use_gomory=not args.no_gomory,
        use_heuristic=not args.no_heuristic,
        time_limit=args.time_limit,
        node_limit=args.node_limit,
    )


def _add_solve_flags(sub) -> None:
    sub.add_argument("--no-cycle-cuts", action="store_true")
    sub.add_argument("--no-gomory", action="store_true")
    sub.add_argument("--no-heuristic", action="store_true")
    sub.add_argument(
        "--mode", choices=["in-tree", "restart"], default="in-tree"
    )
    sub.add_argument("--time-limit", type=float, default=3600.0, metavar="S")
    sub.add_argument("--node-limit", type=int, default=None, metavar="N")


def _load_table(path: str):
    with open(path) as stream:
        return parse_score_file(stream)


def _print_report(report: RunReport) -> None:
    rows = [
        ("Title", report.file),
        ("# Attributes", report.n),
        ("# Instances", "" if report.instances is None else report.instances),
        ("# ILP Variables", report.stats.ilp_variable_count),
        ("BDeu Score", f"{report.stats.best_score:.6f}"),
        ("Time Elapsed (in sec)", f"{report.stats.elapsed_seconds:.3f}"),
        ("# Cluster Cut Iterations", report.stats.cluster_cut_iterations),
        ("# Cycle Cut Iterations", report.stats.cycle_cut_iterations),
        ("# Cycle Cut Count", report.stats.cycle_cut_count),
    ]
    for label, value in rows:
        print(f"{label}: {value}")


def cmd_score(args) -> int:
    try:
        with open(args.data) as stream:
            data = load_csv(stream)
        table = build_score_table(
            data,
            parent_limit=args.parent_limit,
            metric=args.metric,
            ess=args.ess,
            prune=not args.no_prune,
        )
    except (OSError, DataFormatError, ValueError) as exc:
        return _fail(str(exc))
    out = args.out or str(Path(args.data).with_suffix(".score"))
    with open(out, "w") as stream:
        write_score_file(table, stream)
    for v in range(table.n):
        print(f"{table.name_of(v)}: {len(table.entries[v])} parent sets")
    print(f"wrote {out}")
    return 0


def cmd_learn(args) -> int:
    try:
        table = _load_table(args.score_file)
        config = _config_from_args(args)
        dag, stats = solver_mod.learn_structure(table, config)
    except (OSError, ScoreFileError, NoFeasibleDagError, ValueError) as exc:
        return _fail(str(exc))
    stem = Path(args.score_file).stem
    report = RunReport(
        file=stem,
        n=table.n,
        instances=instances_from_name(stem),
        stats=stats,
        dag=dag,
        config=config,
    )
    _print_report(report)
    if args.dot:
        with open(args.dot, "w") as stream:
            stream.write(to_dot(dag, table))
    if args.stats_json:
        with open(args.stats_json, "w") as stream:
            stream.write(to_json(report))
    if args.plot:
        render_trace_figure(report, args.plot)
    return 0 if stats.optimal else 2


def cmd_oracle(args) -> int:
    try:
        table = _load_table(args.score_file)
        _, oracle = solver_mod.exhaustive_optimum(table)
        dag, _ = solver_mod.learn_structure(table)
    except (OSError, ScoreFileError, NoFeasibleDagError, ValueError) as exc:
        return _fail(str(exc))
    print(f"exhaustive optimum: {oracle:.6f}")
    print(f"branch-and-cut:     {dag.total_score:.6f}")
    if abs(dag.total_score - oracle) <= 1e-6:
        print("PASS")
        return 0
    print("FAIL")
    return 1


def cmd_bench(args) -> int:
    directory = Path(args.directory)
    if not directory.is_dir():
        return _fail(f"{args.directory} is not a directory")
    names = [n.strip() for n in args.configs.split(",") if n.strip()]
    unknown = [n for n in names if n not in CONFIG_PRESETS]
    if unknown or not names:
        return _fail(
            "unknown config names "
            f"{unknown}; choose from {sorted(CONFIG_PRESETS)}"
        )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for path in sorted(directory.glob("*.score")):
        stem = path.stem
        for name in names:
            overrides = dict(CONFIG_PRESETS[name])
            overrides["time_limit"] = args.time_limit
            config = SolveConfig(**overrides)
            try:
                table = _load_table(str(path))
                dag, stats = solver_mod.learn_structure(table, config)
            except (OSError, ScoreFileError, NoFeasibleDagError) as exc:
                rows.append(bench_error_row(stem, name, str(exc)))
                continue
            report = RunReport(
                file=stem,
                n=table.n,
                instances=instances_from_name(stem),
                stats=stats,
                dag=dag,
                config=config,
            )
            row = bench_row(report, name)
            if not stats.optimal:
                row[-1] = "limit reached"
            rows.append(row)
            trace_path = outdir / f"{stem}__{name}_trace.csv"
            with open(trace_path, "w") as stream:
                write_trace_csv(stats, stream)
            if not args.no_figures:
                render_trace_figure(report, str(outdir / f"{stem}__{name}.png"))
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(BENCH_HEADERS)
    writer.writerows(rows)
    with open(outdir / "bench.csv", "w", newline="") as stream:
        file_writer = csv.writer(stream, lineterminator="\n")
        file_writer.writerow(BENCH_HEADERS)
        file_writer.writerows(rows)
    return 0


def cmd_gen(args) -> int:
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    seed = seed_from_env(0) if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    try:
        for i in range(args.count):
            table = random_score_table(args.nodes, args.parent_limit, rng)
            path = outdir / f"gen{i:02d}.score"
            with open(path, "w") as stream:
                write_score_file(table, stream)
            print(f"wrote {path}")
    except ValueError as exc:
        return _fail(str(exc))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="bncut", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    score = subs.add_parser("score", help="score a categorical CSV dataset")
    score.add_argument("data")
    score.add_argument("--out", default=None)
    score.add_argument("--parent-limit", type=int, default=2, metavar="N")
    score.add_argument("--metric", choices=["bdeu", "k2"], default="bdeu")
    score.add_argument("--ess", type=float, default=1.0)
    score.add_argument("--no-prune", action="store_true")
    score.set_defaults(func=cmd_score)

    learn = subs.add_parser("learn", help="learn a structure from a score file")
    learn.add_argument("score_file")
    _add_solve_flags(learn)
    learn.add_argument("--dot", default=None, metavar="PATH")
    learn.add_argument("--stats-json", default=None, metavar="PATH")
    learn.add_argument("--plot", default=None, metavar="PATH")
    learn.set_defaults(func=cmd_learn)

    oracle = subs.add_parser(
        "oracle", help="verify the solver against exhaustive enumeration"
    )
    oracle.add_argument("score_file")
    oracle.set_defaults(func=cmd_oracle)

    bench = subs.add_parser("bench", help="run every score file in a directory")
    bench.add_argument("directory")
    bench.add_argument("--configs", default="default")
    bench.add_argument("--out", default="bench_out", metavar="DIR")
    bench.add_argument("--time-limit", type=float, default=3600.0, metavar="S")
    bench.add_argument("--no-figures", action="store_true")
    bench.set_defaults(func=cmd_bench)

    gen = subs.add_parser("gen", help="write random score files")
    gen.add_argument("outdir")
    gen.add_argument("--count", type=int, default=5)
    gen.add_argument("--nodes", type=int, default=10)
    gen.add_argument("--parent-limit", type=int, default=2, metavar="N")
    gen.add_argument("--seed", type=int, default=None)
    gen.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
