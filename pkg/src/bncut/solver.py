"""Branch-and-cut driver and the structure-learning controller.

solve_bnb is a plain best-first branch-and-bound over binary columns with
optional root Gomory rounds and an optional integer-point callback that
can reject a candidate by returning violated cuts (lazy constraints).

learn_structure alternates root LP solves, sink-heuristic warm starts and
acyclicity separation.  Cluster and cycle cuts accumulate in the model's
pool and survive restarts; Gomory cuts live only inside one solve_bnb
call.  Two modes: in_tree separates at every integer candidate inside the
tree, restart solves to integer optimality, post-checks for cycles and
rebuilds the tree when the optimum is cyclic.

Gomory generation happens at the root only.  Cuts derived under branching
fixes would be valid just for that subtree, and the engine shares one row
set across the tree, so non-root generation is structurally disabled.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .heuristic import NoAdmissibleParentSetError, sink_heuristic
from .model import (
    BnIlpModel,
    CyclicSolutionError,
    DagSolution,
    build_model,
    cluster_cut,
    extract_dag,
    induced_digraph,
)
from .scores import ScoreTable
from .separation import enumerate_elementary_cycles, find_violated_cluster
from .simplex import (
    INFEASIBLE,
    ITERATION_LIMIT,
    Cut,
    LpError,
    LpProblem,
    add_rows,
    gomory_cuts,
    solve_lp,
)


class NoFeasibleDagError(RuntimeError):
    """No acyclic structure is selectable from the table's entries."""


@dataclass
class SolveConfig:
    """Feature toggles and limits for one learn_structure run."""

    mode: str = "in_tree"
    use_cycle_cuts: bool = True
    use_gomory: bool = True
    use_heuristic: bool = True
    time_limit: float = 3600.0
    node_limit: int | None = None
    int_tol: float = 1e-6
    sep_tol: float = 1e-6
    gomory_root_cuts: int = 10
    gomory_passes: int = 10

    def __post_init__(self) -> None:
        if self.mode not in ("in_tree", "restart"):
            raise ValueError("mode must be 'in_tree' or 'restart'")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError("node_limit must be positive when set")
        if self.gomory_root_cuts < 0 or self.gomory_passes < 0:
            raise ValueError("gomory caps must be non-negative")


@dataclass
class SolveStats:
    """Counters and traces reported alongside a learned structure."""

    ilp_variable_count: int = 0
    best_score: float = math.nan
    elapsed_seconds: float = 0.0
    cluster_cut_iterations: int = 0
    cycle_cut_iterations: int = 0
    cycle_cut_count: int = 0
    heuristic_score_trace: list[tuple[int, float]] = field(default_factory=list)
    objective_trace: list[tuple[int, float]] = field(default_factory=list)
    optimal: bool = False


@dataclass
class BnBNode:
    """Bound fixes relative to the root, with the parent's LP bound."""

    fixed: tuple[tuple[int, int], ...]
    lp_bound: float
    depth: int


@dataclass
class BnbResult:
    x: np.ndarray | None
    objective: float
    optimal: bool
    nodes_processed: int = 0
    pivots: int = 0
    gomory_cut_count: int = 0


def _check_binary(problem: LpProblem) -> None:
    for col, flag in enumerate(problem.integrality):
        if not flag:
            continue
        lo, hi = problem.col_bounds[col]
        if lo not in (0.0, 1.0) or hi not in (0.0, 1.0):
            raise LpError("integer columns must be binary-bounded")


def _with_fixes(problem: LpProblem, fixed) -> LpProblem:
    if not fixed:
        return problem
    bounds = list(problem.col_bounds)
    for col, val in fixed:
        bounds[col] = (float(val), float(val))
    return replace(problem, col_bounds=bounds)


def _solve_node(problem, warm, tries=2):
    for attempt in range(tries):
        result = solve_lp(problem, warm_basis=warm if attempt == 0 else None)
        if result.status != ITERATION_LIMIT:
            return result
    raise LpError("node LP hit the iteration limit even from a cold start")


def _branch_column(problem: LpProblem, x: np.ndarray, int_tol: float) -> int | None:
    best = None
    best_dist = None
    for col, flag in enumerate(problem.integrality):
        if not flag:
            continue
        val = float(x[col])
        if abs(val - round(val)) <= int_tol:
            continue
        dist = abs(val - 0.5)
        if best is None or dist < best_dist - 1e-12:
            best = col
            best_dist = dist
    return best


def solve_bnb(
    problem: LpProblem,
    config: SolveConfig,
    incumbent_hint: tuple[np.ndarray, float] | None = None,
    integer_callback=None,
    deadline: float | None = None,
    warm_basis=None,
) -> BnbResult:
    """Best-first branch-and-bound; binary branching by bound fixing.

    The callback, when given, sees every integer candidate and may reject
    it by returning violated cuts; returned cuts are appended to the
    working problem (visible to the whole remaining tree) and the node is
    re-solved.  A rejected point never becomes the incumbent.  Hitting the
    time or node limit returns the best point so far flagged non-optimal.
    """
    _check_binary(problem)
    if deadline is None:
        deadline = time.monotonic() + config.time_limit
    working = problem
    best_x = None
    best_obj = -math.inf
    if incumbent_hint is not None:
        best_x = np.array(incumbent_hint[0], dtype=float)
        best_obj = float(incumbent_hint[1])
    out = BnbResult(x=None, objective=best_obj, optimal=False)

    root = _solve_node(working, warm_basis)
    if root.status == INFEASIBLE:
        out.x = best_x
        out.optimal = True
        return out
    out.pivots += root.pivots
    if config.use_gomory:
        for _ in range(config.gomory_passes):
            if config.gomory_root_cuts == 0:
                break
            if _branch_column(working, root.x, config.int_tol) is None:
                break
            cuts = gomory_cuts(working, root, max_cuts=config.gomory_root_cuts)
            if not cuts:
                break
            working = add_rows(working, cuts)
            out.gomory_cut_count += len(cuts)
            root = _solve_node(working, root.basis)
            out.pivots += root.pivots
            if root.status == INFEASIBLE:
                # cuts never exclude integer points, so the integer problem
                # is infeasible as well
                out.x = best_x
                out.optimal = True
                return out

    seq = itertools.count()
    heap = [
        ((-root.objective, 0, next(seq)), BnBNode((), root.objective, 0), root.basis)
    ]
    completed = True
    while heap:
        if time.monotonic() > deadline:
            completed = False
            break
        if config.node_limit is not None and out.nodes_processed >= config.node_limit:
            completed = False
            break
        _, node, parent_basis = heapq.heappop(heap)
        if node.lp_bound <= best_obj + 1e-9:
            continue
        out.nodes_processed += 1
        nodeprob = _with_fixes(working, node.fixed)
        result = _solve_node(nodeprob, parent_basis)
        if result.status == INFEASIBLE:
            continue
        out.pivots += result.pivots
        while True:
            if result.objective <= best_obj + 1e-9:
                break
            col = _branch_column(nodeprob, result.x, config.int_tol)
            if col is not None:
                for val in (1, 0):
                    child = BnBNode(
                        fixed=node.fixed + ((col, val),),
                        lp_bound=result.objective,
                        depth=node.depth + 1,
                    )
                    key = (-result.objective, -child.depth, next(seq))
                    heapq.heappush(heap, (key, child, result.basis))
                break
            if integer_callback is not None:
                cuts = integer_callback(result.x)
                if cuts:
                    working = add_rows(working, cuts)
                    nodeprob = _with_fixes(working, node.fixed)
                    result = _solve_node(nodeprob, result.basis)
                    if result.status == INFEASIBLE:
                        break
                    out.pivots += result.pivots
                    continue
            best_obj = result.objective
            best_x = result.x.copy()
            break

    out.x = best_x
    out.objective = best_obj
    out.optimal = completed
    return out


def _distinct_cycle_sets(report) -> list[frozenset]:
    seen = set()
    out = []
    for cyc in report.cycles:
        key = frozenset(cyc)
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def learn_structure(
    table: ScoreTable, config: SolveConfig | None = None
) -> tuple[DagSolution, SolveStats]:
    """Learn a provably optimal structure by branch-and-cut.

    Outer loop: solve the root LP over the current cut pool, warm-start an
    incumbent with the sink heuristic, separate against the fractional
    root point (one most-violated cluster via the sub-IP, plus every
    violated cycle cut when enabled), and once the root is clean hand the
    problem to solve_bnb.  The integer optimum is accepted only after a
    final certification pass finds no cycle and no violated cluster.
    """
    if config is None:
        config = SolveConfig()
    start = time.monotonic()
    deadline = start + config.time_limit
    model = build_model(table)
    stats = SolveStats(ilp_variable_count=len(model.columns))
    working = model.base
    basis = None
    best_dag: DagSolution | None = None
    best_heur = -math.inf
    iteration = 0
    out_of_time = False

    def pool_cluster(members: frozenset, origin: str) -> list[Cut]:
        """Derive the cluster cut; pool and count it when new.  The cut is
        returned even when already pooled, so callers never accept a
        violated point just because its cut was seen before."""
        cut = cluster_cut(model, members, origin=origin)
        if model.add_pool_cut(members, cut):
            if origin == "cluster":
                stats.cluster_cut_iterations += 1
            return [cut]
        return [cut]

    def separate_integer(x: np.ndarray) -> list[Cut]:
        """Cuts violated by an integer point; empty iff the point is
        acyclic.  Cycle detection when enabled, sub-IP otherwise."""
        sol = model.solution(x)
        cuts: list[Cut] = []
        if config.use_cycle_cuts:
            g = induced_digraph(model, sol, eps=config.int_tol)
            report = enumerate_elementary_cycles(g)
            added = 0
            for members in _distinct_cycle_sets(report):
                cut = cluster_cut(model, members, origin="cycle")
                if cut.violation(x) <= config.sep_tol:
                    continue
                cuts.append(cut)
                if model.add_pool_cut(members, cut):
                    added += 1
            if added:
                stats.cycle_cut_iterations += 1
                stats.cycle_cut_count += added
            return cuts
        sep = find_violated_cluster(model, sol, sep_tol=config.sep_tol)
        if sep.cluster is not None:
            cuts.extend(pool_cluster(frozenset(sep.cluster.members), "cluster"))
        return cuts

    while True:
        iteration += 1
        if time.monotonic() > deadline:
            out_of_time = True
            break
        result = _solve_node(working, basis)
        if result.status == INFEASIBLE:
            raise NoFeasibleDagError(
                "the cut pool proves no acyclic selection exists"
            )
        basis = result.basis
        stats.objective_trace.append((iteration, result.objective))
        root_point = model.solution(result.x)

        if config.use_heuristic:
            try:
                heur = sink_heuristic(model, root_point)
            except NoAdmissibleParentSetError:
                heur = None
            if heur is not None:
                if heur.total_score > best_heur:
                    best_heur = heur.total_score
                if best_dag is None or heur.total_score > best_dag.total_score:
                    best_dag = heur
                stats.heuristic_score_trace.append((iteration, best_heur))

        # root separation: one cluster cut plus bulk violated cycle cuts
        new_cuts: list[Cut] = []
        sep = find_violated_cluster(model, root_point, sep_tol=config.sep_tol)
        if sep.cluster is not None:
            members = frozenset(sep.cluster.members)
            if not model.in_pool(members):
                new_cuts.extend(pool_cluster(members, "cluster"))
        if config.use_cycle_cuts:
            g = induced_digraph(model, root_point, eps=config.int_tol)
            report = enumerate_elementary_cycles(g)
            added = 0
            for members in _distinct_cycle_sets(report):
                if model.in_pool(members):
                    continue
                cut = cluster_cut(model, members, origin="cycle")
                if cut.violation(result.x) <= config.sep_tol:
                    continue
                model.add_pool_cut(members, cut)
                new_cuts.append(cut)
                added += 1
            if added:
                stats.cycle_cut_iterations += 1
                stats.cycle_cut_count += added
        if new_cuts:
            working = add_rows(working, new_cuts)
            continue

        hint = None
        if best_dag is not None:
            hint = (model.dag_to_x(best_dag), best_dag.total_score)
        callback = separate_integer if config.mode == "in_tree" else None
        pool_before = len(model.cut_pool)
        bnb = solve_bnb(
            working,
            config,
            incumbent_hint=hint,
            integer_callback=callback,
            deadline=deadline,
            warm_basis=basis,
        )
        # the pool may have grown through the callback; fold it back into
        # the outer working problem (rows are append-only, basis stays valid)
        if len(model.cut_pool) > pool_before:
            working = add_rows(model.base, model.cut_pool)
        if bnb.x is None:
            if bnb.optimal:
                raise NoFeasibleDagError(
                    "branch-and-bound exhausted the tree with no structure"
                )
            out_of_time = True
            break

        candidate = model.solution(bnb.x)
        try:
            dag = extract_dag(model, candidate)
        except CyclicSolutionError:
            dag = None
        if not bnb.optimal:
            if dag is not None and (
                best_dag is None or dag.total_score > best_dag.total_score
            ):
                best_dag = dag
            out_of_time = True
            break
        if dag is None:
            # restart path: the integer optimum is cyclic, so its cuts are
            # missing from the pool; add them and rebuild the tree
            separate_integer(bnb.x)
            if len(model.cut_pool) == pool_before:
                # a violated cut would have to be new: pooled cuts are rows
                # of the LP the optimum satisfied
                raise LpError("separation made no progress on a cyclic optimum")
            working = add_rows(model.base, model.cut_pool)
            basis = None
            continue
        certify = find_violated_cluster(
            model, candidate, sep_tol=config.sep_tol
        )
        if certify.cluster is not None:
            members = frozenset(certify.cluster.members)
            if model.in_pool(members):
                raise LpError("certification re-derived an enforced cluster")
            pool_cluster(members, "cluster")
            working = add_rows(model.base, model.cut_pool)
            basis = None
            continue
        best_dag = dag
        stats.best_score = dag.total_score
        stats.optimal = True
        stats.elapsed_seconds = time.monotonic() - start
        return dag, stats

    # limits hit: fall back to the best feasible structure seen
    if best_dag is None:
        try:
            zero = model.solution(np.zeros(len(model.columns)))
            best_dag = sink_heuristic(model, zero)
        except NoAdmissibleParentSetError:
            raise NoFeasibleDagError(
                "no feasible structure found within the limits"
            ) from None
    stats.best_score = best_dag.total_score
    stats.optimal = False
    stats.elapsed_seconds = time.monotonic() - start
    return best_dag, stats


def exhaustive_optimum(table: ScoreTable) -> tuple[DagSolution, float]:
    """Brute-force optimum over all topological orders; n <= 8 only.

    For a fixed permutation the nodes choose independently, so the first
    admissible entry in table order (highest score) is per-node optimal;
    the permutation maximum therefore equals the DAG optimum.
    """
    n = table.n
    if n > 8:
        raise ValueError("exhaustive oracle is limited to 8 nodes")
    per_node = []
    for v in range(n):
        per_node.append(
            [
                (sum(1 << p for p in e.parents), e.score, e.parents)
                for e in table.entries[v]
            ]
        )
    best_choice = None
    best_score = -math.inf
    for perm in itertools.permutations(range(n)):
        mask = 0
        total = 0.0
        choice = [None] * n
        for v in perm:
            for pmask, score, parents in per_node[v]:
                if pmask & ~mask == 0:
                    total += score
                    choice[v] = parents
                    break
            else:
                total = None
                break
            mask |= 1 << v
        if total is not None and total > best_score:
            best_score = total
            best_choice = tuple(choice)
    if best_choice is None:
        raise NoFeasibleDagError("no permutation admits a complete selection")
    dag = DagSolution(parent_choice=best_choice, total_score=best_score)
    return dag, best_score
