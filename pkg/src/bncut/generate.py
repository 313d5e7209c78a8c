"""Random test-instance generation.

Used by the CLI `gen` subcommand and the test suite.  The environment
variable BNLEARN_SEED, when set, fixes the default seed; it is consumed
nowhere else in the package.
"""

from __future__ import annotations

import itertools
import os

import numpy as np

from .scores import ParentSetEntry, ScoreTable, VariableMeta


def seed_from_env(default: int = 0) -> int:
    """Return the generation seed, honoring BNLEARN_SEED when set."""
    raw = os.environ.get("BNLEARN_SEED")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"BNLEARN_SEED must be an integer, got {raw!r}") from None


def random_score_table(
    n: int,
    parent_limit: int,
    rng: np.random.Generator,
    low: float = -10.0,
    high: float = 0.0,
) -> ScoreTable:
    """Build a score table with every parent set of size <= parent_limit.

    Scores are drawn uniformly from [low, high].  Variables are named
    V0..V{n-1} with nominal arity 2 (the entries are synthetic, so arity
    carries no information).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= parent_limit < n:
        raise ValueError("parent_limit must be in [0, n)")
    variables = [VariableMeta(id=v, name=f"V{v}", arity=2) for v in range(n)]
    entries = []
    for v in range(n):
        others = [u for u in range(n) if u != v]
        ents = []
        for size in range(parent_limit + 1):
            for combo in itertools.combinations(others, size):
                score = float(rng.uniform(low, high))
                ents.append(ParentSetEntry(parents=combo, score=score))
        entries.append(ents)
    return ScoreTable(variables=variables, entries=entries)
