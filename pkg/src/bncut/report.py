"""Run reporting: JSON stats, trace tables, and objective figures.

The JSON field names are frozen for downstream tooling; "dag", "config"
and "instances" are extension keys kept alongside them so a report can be
rebuilt losslessly.  The benchmark table reuses the column headers of the
reference result tables, with "Config" and "Error" appended so per-file
failures land in rows instead of aborting a run.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass

from .model import DagSolution
from .solver import SolveConfig, SolveStats

BENCH_HEADERS = [
    "Title",
    "# Attributes",
    "# Instances",
    "# ILP Variables",
    "BDeu Score",
    "Time Elapsed (in sec)",
    "# Cluster Cut Iterations",
    "# Cycle Cut Iterations",
    "# Cycle Cut Count",
    "Config",
    "Error",
]


@dataclass
class RunReport:
    """One solve, identified by its input file, with stats and result."""

    file: str
    n: int
    instances: int | None
    stats: SolveStats
    dag: DagSolution
    config: SolveConfig


def instances_from_name(stem: str) -> int | None:
    """Instance count encoded as a trailing _<int> of the file stem."""
    match = re.search(r"_(\d+)$", stem)
    return int(match.group(1)) if match else None


def _trace_rows(stats: SolveStats) -> list[dict]:
    heur = dict(stats.heuristic_score_trace)
    rows = []
    for iteration, relax in stats.objective_trace:
        rows.append(
            {
                "iter": iteration,
                "relax_obj": relax,
                "heur_obj": heur.get(iteration),
            }
        )
    return rows


def to_json(report: RunReport) -> str:
    payload = {
        "file": report.file,
        "n": report.n,
        "ilp_variables": report.stats.ilp_variable_count,
        "score": report.stats.best_score,
        "elapsed_sec": report.stats.elapsed_seconds,
        "cluster_cut_iterations": report.stats.cluster_cut_iterations,
        "cycle_cut_iterations": report.stats.cycle_cut_iterations,
        "cycle_cut_count": report.stats.cycle_cut_count,
        "optimal": report.stats.optimal,
        "trace": _trace_rows(report.stats),
        "instances": report.instances,
        "dag": {
            "parent_sets": [list(p) for p in report.dag.parent_choice],
            "score": report.dag.total_score,
        },
        "config": dataclasses.asdict(report.config),
    }
    return json.dumps(payload, indent=2)


def from_json(text: str) -> RunReport:
    payload = json.loads(text)
    objective_trace = [
        (row["iter"], row["relax_obj"]) for row in payload["trace"]
    ]
    heuristic_trace = [
        (row["iter"], row["heur_obj"])
        for row in payload["trace"]
        if row["heur_obj"] is not None
    ]
    stats = SolveStats(
        ilp_variable_count=payload["ilp_variables"],
        best_score=payload["score"],
        elapsed_seconds=payload["elapsed_sec"],
        cluster_cut_iterations=payload["cluster_cut_iterations"],
        cycle_cut_iterations=payload["cycle_cut_iterations"],
        cycle_cut_count=payload["cycle_cut_count"],
        heuristic_score_trace=heuristic_trace,
        objective_trace=objective_trace,
        optimal=payload["optimal"],
    )
    dag = DagSolution(
        parent_choice=tuple(
            tuple(p) for p in payload["dag"]["parent_sets"]
        ),
        total_score=payload["dag"]["score"],
    )
    return RunReport(
        file=payload["file"],
        n=payload["n"],
        instances=payload["instances"],
        stats=stats,
        dag=dag,
        config=SolveConfig(**payload["config"]),
    )


def write_trace_csv(stats: SolveStats, stream) -> None:
    stream.write("iter,relax_obj,heur_obj\n")
    for row in _trace_rows(stats):
        heur = "" if row["heur_obj"] is None else repr(row["heur_obj"])
        stream.write(f"{row['iter']},{row['relax_obj']!r},{heur}\n")


def bench_row(report: RunReport, config_name: str) -> list[str]:
    stats = report.stats
    return [
        report.file,
        str(report.n),
        "" if report.instances is None else str(report.instances),
        str(stats.ilp_variable_count),
        f"{stats.best_score:.6f}",
        f"{stats.elapsed_seconds:.3f}",
        str(stats.cluster_cut_iterations),
        str(stats.cycle_cut_iterations),
        str(stats.cycle_cut_count),
        config_name,
        "",
    ]


def bench_error_row(title: str, config_name: str, message: str) -> list[str]:
    row = [title] + [""] * 8 + [config_name, message]
    return row


def render_trace_figure(report: RunReport, path: str) -> None:
    """Objective progression figure: relaxation values as a dotted blue
    line, best heuristic score dashed red.  Rendered straight to file via
    the Agg canvas, so no interactive backend is touched."""
    from matplotlib.backends.backend_agg import FigureCanvasAgg
    from matplotlib.figure import Figure

    fig = Figure(figsize=(7.0, 4.5))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(111)
    if report.stats.objective_trace:
        iters = [it for it, _ in report.stats.objective_trace]
        objs = [val for _, val in report.stats.objective_trace]
        ax.plot(iters, objs, "o-", color="tab:blue", label="relaxation objective")
    if report.stats.heuristic_score_trace:
        its = [it for it, _ in report.stats.heuristic_score_trace]
        vals = [val for _, val in report.stats.heuristic_score_trace]
        ax.plot(its, vals, "--", color="tab:red", label="best heuristic")
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective value")
    ax.set_title(report.file)
    if report.stats.objective_trace or report.stats.heuristic_score_trace:
        ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
