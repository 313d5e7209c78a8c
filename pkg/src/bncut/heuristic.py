"""Sink-finding primal heuristic.

Builds a feasible DAG from any convexity-feasible fractional solution by
committing one node per round: each undecided node nominates its best
still-admissible parent set, and the nomination whose column value is
closest to 1 wins.  Committed nodes are banned as parents afterwards, so
the commit order is a reverse topological order and the result is acyclic
by construction.
"""

from __future__ import annotations

from .model import BnIlpModel, DagSolution, FractionalSolution


class NoAdmissibleParentSetError(ValueError):
    """Some undecided node has every entry blocked by committed nodes.

    Only possible when the empty parent set is absent from that node's
    table; with it present the heuristic is total.
    """


def sink_heuristic(model: BnIlpModel, x: FractionalSolution) -> DagSolution:
    """Run n rounds of sink selection and return the assembled DAG.

    best(v) is recomputed each round against the current banned set; table
    order (descending score) makes the first admissible entry the best
    one.  Ties in closeness to 1 are broken by lower node id, then by the
    nominated parent set.  When every candidate column is 0 the rule
    degrades to score-only selection through the same comparisons.
    """
    n = model.n
    banned: set[int] = set()
    decided: list[tuple[int, ...] | None] = [None] * n
    for _ in range(n):
        best_key = None
        best_pick = None
        for v in range(n):
            if decided[v] is not None:
                continue
            for entry in model.table.entries[v]:
                if not banned.intersection(entry.parents):
                    nominee = entry.parents
                    break
            else:
                raise NoAdmissibleParentSetError(
                    f"node {v} has no parent set avoiding {sorted(banned)}"
                )
            val = float(x.x[model.column_of(v, nominee)])
            key = (1.0 - val, v, nominee)
            if best_key is None or key < best_key:
                best_key = key
                best_pick = (v, nominee)
        v, nominee = best_pick
        decided[v] = nominee
        banned.add(v)
    total = sum(model.score_of(v, decided[v]) for v in range(n))
    return DagSolution(parent_choice=tuple(decided), total_score=total)
