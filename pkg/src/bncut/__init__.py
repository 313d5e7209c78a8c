"""Exact Bayesian network structure learning by branch-and-cut.

The package scores candidate parent sets from categorical data, encodes
structure selection as a 0/1 program with one convexity row per node, and
solves it with a self-contained branch-and-cut engine: cluster-constraint
separation via a small sub-IP, elementary-cycle cuts, Gomory fractional
cuts at the root, and a sink-finding primal heuristic.
"""

from .heuristic import NoAdmissibleParentSetError, sink_heuristic
from .model import (
    BnIlpModel,
    CyclicSolutionError,
    DagSolution,
    FractionalSolution,
    NonIntegralError,
    WeightedDigraph,
    build_model,
    cluster_cut,
    cluster_lhs,
    extract_dag,
    induced_digraph,
    is_acyclic,
    to_dot,
)
from .report import RunReport, render_trace_figure, to_json, write_trace_csv
from .scores import (
    ContingencyCounts,
    DataFormatError,
    Dataset,
    ParentSetEntry,
    ScoreFileError,
    ScoreTable,
    VariableMeta,
    bdeu_local,
    build_score_table,
    count_configurations,
    k2_local,
    load_csv,
    parse_score_file,
    prune_dominated,
    write_score_file,
)
from .separation import (
    Cluster,
    CycleCapExceededError,
    CyclesReport,
    SeparationResult,
    build_cluster_subip,
    cycle_cuts_for,
    enumerate_elementary_cycles,
    find_violated_cluster,
)
from .simplex import Cut, LpError, LpProblem, LpResult, add_rows, gomory_cuts, solve_lp
from .solver import (
    BnbResult,
    NoFeasibleDagError,
    SolveConfig,
    SolveStats,
    exhaustive_optimum,
    learn_structure,
    solve_bnb,
)

__version__ = "0.1.0"
