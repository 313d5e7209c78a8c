"""Separation of violated acyclicity constraints.

Two routes: the most-violated cluster via a small sub-IP (binary J per
supported column, binary M per node, objective sum x*J - sum M), and bulk
conversion of elementary cycles of the thresholded solution digraph into
cluster-form cuts.  A cluster constraint is violated iff the sub-IP
optimum exceeds -1, so acceptance uses the threshold -1 + sep_tol.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx
import numpy as np

from .model import BnIlpModel, FractionalSolution, WeightedDigraph, cluster_cut
from .simplex import Cut, LpProblem, LpRow, add_rows

SEP_TOL = 1e-6
SUPPORT_EPS = 1e-6
CYCLE_CAP = 10**6


class CycleCapExceededError(RuntimeError):
    """Raised when the digraph holds pathologically many elementary cycles."""


@dataclass(frozen=True)
class Cluster:
    """A node subset whose cluster constraint is of interest."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        if list(self.members) != sorted(set(self.members)):
            raise ValueError("members must be strictly sorted and unique")


@dataclass
class SeparationResult:
    """Outcome of one cluster separation: cluster present iff the sub-IP
    objective exceeds -1 + sep_tol."""

    cluster: Cluster | None
    sub_ip_objective: float


@dataclass
class CyclesReport:
    """Elementary cycles, canonicalized to start at their smallest node."""

    cycles: list[tuple[int, ...]]
    count: int


@dataclass
class SubIpLegend:
    """Maps sub-IP columns back to the master model: the first
    len(support_cols) columns are J variables for those master columns, the
    next n are M variables per node."""

    support_cols: list[int]
    n: int

    @property
    def m_offset(self) -> int:
        return len(self.support_cols)


def build_cluster_subip(
    model: BnIlpModel,
    x: FractionalSolution,
    support_eps: float = SUPPORT_EPS,
) -> tuple[LpProblem, SubIpLegend]:
    """Pose the most-violated-cluster search as a small binary program.

    One J column per master column with x above support_eps and a nonempty
    parent set (empty parent sets cannot satisfy J <= sum over an empty W
    and contribute nothing), one M column per node.  Per J column, two
    rows: J <= M(child) and J <= sum of M(parent).  The first row must be
    an implication, not an equality: a child may sit in the cluster while
    only some of its supported parent sets intersect it, and forcing J up
    to M would misprice exactly those clusters.
    """
    support = [
        col
        for col, (v, parents) in enumerate(model.columns)
        if parents and float(x.x[col]) > support_eps
    ]
    n = model.n
    legend = SubIpLegend(support_cols=support, n=n)
    k = len(support)
    objective = np.zeros(k + n)
    for slot, col in enumerate(support):
        objective[slot] = float(x.x[col])
    objective[k:] = -1.0
    rows = []
    for slot, col in enumerate(support):
        v, parents = model.columns[col]
        rows.append(
            LpRow(coeffs=((slot, 1.0), (k + v, -1.0)), sense="<=", rhs=0.0)
        )
        rows.append(
            LpRow(
                coeffs=((slot, 1.0),) + tuple((k + w, -1.0) for w in parents),
                sense="<=",
                rhs=0.0,
            )
        )
    problem = LpProblem(
        num_cols=k + n,
        objective=objective,
        col_bounds=[(0.0, 1.0)] * (k + n),
        rows=rows,
        integrality=[True] * (k + n),
    )
    return problem, legend


def _default_subip_solver(problem: LpProblem):
    # Imported lazily: solver builds on this module for its outer loop.
    from .solver import SolveConfig, solve_bnb

    config = SolveConfig(use_cycle_cuts=False, use_gomory=False, use_heuristic=False)
    out = solve_bnb(problem, config)
    if not out.optimal or out.x is None:
        raise RuntimeError("cluster sub-IP did not solve to optimality")
    return out.x, out.objective


def find_violated_cluster(
    model: BnIlpModel,
    x: FractionalSolution,
    subip_solver=None,
    support_eps: float = SUPPORT_EPS,
    sep_tol: float = SEP_TOL,
) -> SeparationResult:
    """Solve the sub-IP to integer optimality and threshold the optimum.

    Clusters below two members are excluded by an added cardinality row
    (the empty set would always score 0 and a singleton can never be
    violated, its child being barred from its own parent sets).  Returns
    the cluster {v : M(v) = 1} when the optimum exceeds -1 + sep_tol.
    """
    problem, legend = build_cluster_subip(model, x, support_eps)
    if not legend.support_cols:
        # Nothing but empty parent sets in support: no cluster can be
        # violated; -2 is the true optimum over two-member clusters.
        return SeparationResult(cluster=None, sub_ip_objective=-2.0)
    k = legend.m_offset
    cardinality = Cut(
        coeffs=tuple((k + v, 1.0) for v in range(legend.n)),
        sense=">=",
        rhs=2.0,
        origin="cluster",
    )
    problem = add_rows(problem, [cardinality])
    if subip_solver is None:
        subip_solver = _default_subip_solver
    sub_x, objective = subip_solver(problem)
    if objective <= -1.0 + sep_tol:
        return SeparationResult(cluster=None, sub_ip_objective=float(objective))
    members = tuple(v for v in range(legend.n) if sub_x[k + v] > 0.5)
    return SeparationResult(
        cluster=Cluster(members=members), sub_ip_objective=float(objective)
    )


def enumerate_elementary_cycles(
    g: WeightedDigraph, cap: int = CYCLE_CAP
) -> CyclesReport:
    """All elementary cycles of the arc set via Johnson's algorithm.

    Each cycle is reported once, rotated to start at its smallest node id;
    the report is sorted by (length, nodes) for determinism.  Raises
    CycleCapExceededError past the safety cap.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(range(g.n))
    graph.add_edges_from((u, v) for u, v, _ in g.arcs)
    cycles = []
    for cyc in nx.simple_cycles(graph):
        pivot = cyc.index(min(cyc))
        cycles.append(tuple(cyc[pivot:] + cyc[:pivot]))
        if len(cycles) > cap:
            raise CycleCapExceededError(
                f"more than {cap} elementary cycles; the digraph is "
                "pathologically dense"
            )
    cycles.sort(key=lambda c: (len(c), c))
    return CyclesReport(cycles=cycles, count=len(cycles))


def cycle_cuts_for(model: BnIlpModel, report: CyclesReport) -> list[Cut]:
    """One cluster-form cut per distinct cycle node set, in report order."""
    seen = set()
    cuts = []
    for cyc in report.cycles:
        key = frozenset(cyc)
        if key in seen:
            continue
        seen.add(key)
        cuts.append(cluster_cut(model, key, origin="cycle"))
    return cuts
