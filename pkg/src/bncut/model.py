"""0/1 encoding of parent-set selection.

One binary column per (child, parent set) pair, one convexity equality per
node forcing exactly one selection.  Acyclicity is not encoded up front;
it arrives as cluster-form cut rows during solving.  Cuts are stored in
the rewritten <= form exclusively (coefficient 1 on every column whose
parent set meets the cluster, rhs |C|-1), and the cut pool is keyed by the
canonical cluster node set regardless of which separator produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scores import ScoreTable
from .simplex import Cut, LpProblem, LpRow

INT_TOL = 1e-6


class NonIntegralError(ValueError):
    """Raised when an integral solution was required but not provided."""


class CyclicSolutionError(ValueError):
    """Raised when an integer solution encodes a cyclic graph.

    Signals a missing lazy cut in the solve loop.
    """


@dataclass(frozen=True)
class FractionalSolution:
    """Column values of an LP relaxation solution."""

    x: np.ndarray
    objective: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.x.size and (self.x.min() < -1e-6 or self.x.max() > 1 + 1e-6):
            raise ValueError("column values must lie in [0, 1] within tolerance")


@dataclass
class WeightedDigraph:
    """Arc-aggregated view of a solution; weights above eps only."""

    n: int
    arcs: list[tuple[int, int, float]]


@dataclass(frozen=True)
class DagSolution:
    """A chosen parent set per node, with the summed local score."""

    parent_choice: tuple[tuple[int, ...], ...]
    total_score: float


@dataclass
class BnIlpModel:
    """Score table plus its LP encoding and the accumulated cut pool."""

    table: ScoreTable
    columns: list[tuple[int, tuple[int, ...]]]
    col_index: dict[tuple[int, tuple[int, ...]], int]
    base: LpProblem
    cut_pool: list[Cut] = field(default_factory=list)
    _pool_keys: set[frozenset] = field(default_factory=set)

    @property
    def n(self) -> int:
        return self.table.n

    def column_of(self, child: int, parents: tuple[int, ...]) -> int:
        return self.col_index[(child, parents)]

    def score_of(self, child: int, parents: tuple[int, ...]) -> float:
        return float(self.base.objective[self.column_of(child, parents)])

    def in_pool(self, cluster: frozenset) -> bool:
        return cluster in self._pool_keys

    def add_pool_cut(self, cluster: frozenset, cut: Cut) -> bool:
        """Record a cluster-form cut; False when the cluster is already pooled."""
        if cluster in self._pool_keys:
            return False
        self._pool_keys.add(cluster)
        self.cut_pool.append(cut)
        return True

    def solution(self, x: np.ndarray) -> FractionalSolution:
        x = np.asarray(x, dtype=float)
        return FractionalSolution(x=x, objective=float(self.base.objective @ x))

    def dag_to_x(self, dag: DagSolution) -> np.ndarray:
        x = np.zeros(len(self.columns))
        for v, parents in enumerate(dag.parent_choice):
            x[self.column_of(v, parents)] = 1.0
        return x


def build_model(table: ScoreTable) -> BnIlpModel:
    """Encode the score table: one binary column per entry, one convexity
    equality per node, no acyclicity rows."""
    columns = []
    col_index = {}
    objective = []
    for v in range(table.n):
        for entry in table.entries[v]:
            col_index[(v, entry.parents)] = len(columns)
            columns.append((v, entry.parents))
            objective.append(entry.score)
    rows = []
    for v in range(table.n):
        coeffs = tuple(
            (col_index[(v, e.parents)], 1.0) for e in table.entries[v]
        )
        rows.append(LpRow(coeffs=coeffs, sense="=", rhs=1.0))
    base = LpProblem(
        num_cols=len(columns),
        objective=np.array(objective, dtype=float),
        col_bounds=[(0.0, 1.0)] * len(columns),
        rows=rows,
        integrality=[True] * len(columns),
    )
    return BnIlpModel(table=table, columns=columns, col_index=col_index, base=base)


def induced_digraph(
    model: BnIlpModel, x: FractionalSolution, eps: float = INT_TOL
) -> WeightedDigraph:
    """Aggregate column values into arc weights: weight(u -> v) is the sum
    of x over v's columns whose parent set contains u."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    weights: dict[tuple[int, int], float] = {}
    for col, (v, parents) in enumerate(model.columns):
        val = float(x.x[col])
        if val == 0.0:
            continue
        for u in parents:
            key = (u, v)
            weights[key] = weights.get(key, 0.0) + val
    arcs = [
        (u, v, w) for (u, v), w in sorted(weights.items()) if w > eps
    ]
    return WeightedDigraph(n=model.n, arcs=arcs)


def _choices_from_integral(model: BnIlpModel, x: FractionalSolution):
    xs = x.x
    for col in range(len(model.columns)):
        if abs(xs[col] - round(xs[col])) > INT_TOL:
            raise NonIntegralError(f"column {col} has fractional value {xs[col]}")
    choices = []
    for v in range(model.n):
        chosen = [
            parents
            for col, (node, parents) in enumerate(model.columns)
            if node == v and xs[col] > 0.5
        ]
        if len(chosen) != 1:
            raise NonIntegralError(
                f"node {v} selects {len(chosen)} parent sets, expected exactly 1"
            )
        choices.append(chosen[0])
    return choices


def is_acyclic(n: int, parent_choice) -> bool:
    """Kahn's algorithm over the arcs u -> v for u in parent_choice[v]."""
    children: list[list[int]] = [[] for _ in range(n)]
    indeg = [0] * n
    for v, parents in enumerate(parent_choice):
        for u in parents:
            children[u].append(v)
            indeg[v] += 1
    queue = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while queue:
        u = queue.pop()
        seen += 1
        for w in children[u]:
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    return seen == n


def extract_dag(model: BnIlpModel, x: FractionalSolution) -> DagSolution:
    """Project an integral, convexity-feasible solution to a DagSolution.

    Raises NonIntegralError on fractional input or broken convexity, and
    CyclicSolutionError when the selection encodes a cycle (a missing lazy
    cut upstream).
    """
    choices = _choices_from_integral(model, x)
    if not is_acyclic(model.n, choices):
        raise CyclicSolutionError("integer selection encodes a directed cycle")
    total = sum(model.score_of(v, parents) for v, parents in enumerate(choices))
    return DagSolution(parent_choice=tuple(choices), total_score=total)


def cluster_lhs(model: BnIlpModel, x: FractionalSolution, cluster) -> float:
    """Original-form lhs: sum over v in C of x mass on parent sets disjoint
    from C.  The constraint is satisfied iff this is >= 1 - tol."""
    members = frozenset(cluster)
    if not members:
        raise ValueError("cluster must be nonempty")
    total = 0.0
    for col, (v, parents) in enumerate(model.columns):
        if v in members and not members.intersection(parents):
            total += float(x.x[col])
    return total


def cluster_cut(model: BnIlpModel, cluster, origin: str = "cluster") -> Cut:
    """Rewritten-form cut: coefficient 1 on every column (v, W) with v in C
    and W meeting C, sense <=, rhs |C|-1.

    With a parent-limit-0 table no column qualifies and the returned cut is
    vacuous (empty coefficients, 0 <= |C|-1); separation never emits one,
    since a vacuous cut cannot be violated.
    """
    members = frozenset(cluster)
    if len(members) < 2:
        raise ValueError("cluster must have at least 2 members")
    coeffs = tuple(
        (col, 1.0)
        for col, (v, parents) in enumerate(model.columns)
        if v in members and members.intersection(parents)
    )
    return Cut(coeffs=coeffs, sense="<=", rhs=float(len(members) - 1), origin=origin)


def to_dot(dag: DagSolution, table: ScoreTable) -> str:
    """DOT export: node declarations in id order, then one line per arc
    "PARENT -> CHILD;" ordered by (parent id, child id)."""
    lines = ["digraph {"]
    for v in range(table.n):
        lines.append(f"    {table.name_of(v)};")
    arcs = []
    for v, parents in enumerate(dag.parent_choice):
        for u in parents:
            arcs.append((u, v))
    for u, v in sorted(arcs):
        lines.append(f"    {table.name_of(u)} -> {table.name_of(v)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
