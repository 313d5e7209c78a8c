"""Categorical data ingestion and Bayesian-Dirichlet local scoring.

Local scores c(v, W) are computed per child node v and candidate parent set W
from a table of category-valued instances.  Two metrics are provided: BDeu
(uniform Dirichlet priors scaled by an equivalent sample size) and K2.  Score
tables can be pruned by subset dominance and round-tripped through the
GOBNILP-compatible text format.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from math import lgamma, prod
from typing import IO, Iterable

import numpy as np


class DataFormatError(ValueError):
    """Raised for malformed CSV input."""


class ScoreFileError(ValueError):
    """Raised for malformed score files."""


@dataclass(frozen=True)
class VariableMeta:
    """One categorical variable: 0-based node id, display name, arity."""

    id: int
    name: str
    arity: int


@dataclass
class Dataset:
    """Categorical instances: one row per instance, one column per variable.

    rows holds category indices, already mapped to 0..arity-1.
    """

    variables: list[VariableMeta]
    rows: np.ndarray

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.int64)
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.variables):
            raise DataFormatError("row matrix width does not match variable count")
        for v in self.variables:
            if v.arity < 2:
                raise DataFormatError(f"variable {v.name!r} has arity {v.arity} < 2")
            if self.rows.shape[0] and int(self.rows[:, v.id].max()) >= v.arity:
                raise DataFormatError(f"variable {v.name!r} has a cell value >= arity")

    @property
    def instance_count(self) -> int:
        return int(self.rows.shape[0])


@dataclass(eq=False)
class ContingencyCounts:
    """Counts N_ijk for one (child, parents) pair.

    Configuration index j is the mixed-radix encoding of the parent values
    in sorted-parent order (first parent most significant); q enumerates the
    full Cartesian product of parent arities, so unobserved configurations
    are present as zero rows.
    """

    child: int
    parents: tuple[int, ...]
    q: int
    n_ijk: np.ndarray
    n_ij: np.ndarray


@dataclass(frozen=True)
class ParentSetEntry:
    """A candidate parent set with its local score (log scale)."""

    parents: tuple[int, ...]
    score: float

    def __post_init__(self) -> None:
        if list(self.parents) != sorted(set(self.parents)):
            raise ValueError("parents must be strictly sorted and unique")
        if not np.isfinite(self.score):
            raise ValueError("score must be finite")


def _entry_key(e: "ParentSetEntry") -> tuple:
    return (-e.score, len(e.parents), e.parents)


@dataclass
class ScoreTable:
    """Per-node candidate parent sets with local scores.

    Entries are normalized to descending score order (ties broken by parent
    set size, then lexicographically), which also fixes the column order of
    the ILP encoding downstream.
    """

    variables: list[VariableMeta]
    entries: list[list[ParentSetEntry]]

    def __post_init__(self) -> None:
        if len(self.entries) != len(self.variables):
            raise ValueError("entries must have one list per variable")
        n = len(self.variables)
        normalized = []
        for v, ents in enumerate(self.entries):
            if not ents:
                raise ValueError(f"node {v} has no parent set entries")
            seen = set()
            for e in ents:
                if v in e.parents:
                    raise ValueError(f"node {v} lists itself as a parent")
                if any(p < 0 or p >= n for p in e.parents):
                    raise ValueError(f"node {v} has an out-of-range parent id")
                if e.parents in seen:
                    raise ValueError(f"node {v} has duplicate parent set {e.parents}")
                seen.add(e.parents)
            normalized.append(sorted(ents, key=_entry_key))
        self.entries = normalized

    @property
    def n(self) -> int:
        return len(self.variables)

    def name_of(self, node: int) -> str:
        return self.variables[node].name


def load_csv(stream: Iterable[str]) -> Dataset:
    """Parse comma-separated categorical data with a header line.

    Labels in each column are mapped to 0..r-1 in order of first appearance;
    arity is the number of distinct labels seen.  Raises DataFormatError
    (with a line number) on ragged rows, an empty table, duplicate header
    names, or a constant column.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("line 1: empty input, expected a header") from None
    header = [h.strip() for h in header]
    if len(set(header)) != len(header):
        raise DataFormatError("line 1: duplicate variable names in header")
    ncols = len(header)
    codes: list[dict[str, int]] = [{} for _ in range(ncols)]
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != ncols:
            raise DataFormatError(
                f"line {lineno}: expected {ncols} fields, got {len(rec)}"
            )
        row = []
        for c, raw in enumerate(rec):
            label = raw.strip()
            row.append(codes[c].setdefault(label, len(codes[c])))
        rows.append(row)
    if not rows:
        raise DataFormatError("no data rows after the header")
    variables = []
    for c, name in enumerate(header):
        arity = len(codes[c])
        if arity < 2:
            raise DataFormatError(
                f"column {name!r} has a single distinct value (arity < 2)"
            )
        variables.append(VariableMeta(id=c, name=name, arity=arity))
    return Dataset(variables=variables, rows=np.array(rows, dtype=np.int64))


def count_configurations(
    data: Dataset, child: int, parents: Iterable[int]
) -> ContingencyCounts:
    """Tally N_ijk over all instances for one (child, parents) pair."""
    ps = tuple(sorted(parents))
    if child in ps:
        raise ValueError("child must not appear in its own parent set")
    arities = [data.variables[p].arity for p in ps]
    q = prod(arities)
    r = data.variables[child].arity
    m = data.instance_count
    if ps:
        j = np.zeros(m, dtype=np.int64)
        for p, a in zip(ps, arities):
            j = j * a + data.rows[:, p]
    else:
        j = np.zeros(m, dtype=np.int64)
    flat = np.bincount(j * r + data.rows[:, child], minlength=q * r)
    n_ijk = flat.reshape(q, r)
    return ContingencyCounts(
        child=child, parents=ps, q=q, n_ijk=n_ijk, n_ij=n_ijk.sum(axis=1)
    )


def bdeu_local(counts: ContingencyCounts, child_arity: int, ess: float) -> float:
    """BDeu local score with alpha_ij = ess/q and alpha_ijk = ess/(r*q).

    The uniform structure prior is a constant across structures and is
    dropped.  Configurations with N_ij = 0 contribute exactly 0 and are
    skipped, so the result is exact for unobserved configurations.
    """
    if ess <= 0:
        raise ValueError("ess must be positive")
    r = child_arity
    a_ij = ess / counts.q
    a_ijk = ess / (counts.q * r)
    total = 0.0
    for j in range(counts.q):
        nij = int(counts.n_ij[j])
        if nij == 0:
            continue
        total += lgamma(a_ij) - lgamma(a_ij + nij)
        for k in range(r):
            nijk = int(counts.n_ijk[j, k])
            if nijk:
                total += lgamma(a_ijk + nijk) - lgamma(a_ijk)
    return total


def k2_local(counts: ContingencyCounts, child_arity: int) -> float:
    """K2 local score: per configuration, ln((r-1)!) - ln((N_ij+r-1)!) + sum ln(N_ijk!)."""
    r = child_arity
    total = 0.0
    for j in range(counts.q):
        nij = int(counts.n_ij[j])
        if nij == 0:
            continue
        total += lgamma(r) - lgamma(nij + r)
        for k in range(r):
            nijk = int(counts.n_ijk[j, k])
            if nijk > 1:
                total += lgamma(nijk + 1)
    return total


def build_score_table(
    data: Dataset,
    parent_limit: int,
    metric: str = "bdeu",
    ess: float = 1.0,
    prune: bool = True,
) -> ScoreTable:
    """Score every parent set of size <= parent_limit for every node.

    metric is "bdeu" (uses ess) or "k2".  With prune, subset-dominated
    entries are removed per prune_dominated.
    """
    n = len(data.variables)
    if parent_limit < 0:
        raise ValueError("parent_limit must be >= 0")
    if parent_limit >= n:
        raise ValueError("parent_limit must be smaller than the variable count")
    if metric not in ("bdeu", "k2"):
        raise ValueError(f"unknown metric {metric!r}")
    entries: list[list[ParentSetEntry]] = []
    for v in range(n):
        others = [u for u in range(n) if u != v]
        r = data.variables[v].arity
        ents = []
        for size in range(parent_limit + 1):
            for combo in itertools.combinations(others, size):
                counts = count_configurations(data, v, combo)
                if metric == "bdeu":
                    s = bdeu_local(counts, r, ess)
                else:
                    s = k2_local(counts, r)
                ents.append(ParentSetEntry(parents=combo, score=s))
        if prune:
            ents = prune_dominated(ents)
        entries.append(ents)
    return ScoreTable(variables=list(data.variables), entries=entries)


def prune_dominated(entries: list[ParentSetEntry]) -> list[ParentSetEntry]:
    """Drop every entry W with a strict subset W' scoring at least as well.

    The empty set has no strict subset and is never removed.  Any optimal
    DAG using a pruned W can swap to the dominating W' without lowering the
    total score, so the ILP optimum is preserved.
    """
    kept = []
    for e in entries:
        s = set(e.parents)
        dominated = any(
            set(o.parents) < s and o.score >= e.score for o in entries if o is not e
        )
        if not dominated:
            kept.append(e)
    return kept


def parse_score_file(stream: IO[str]) -> ScoreTable:
    """Read a GOBNILP-compatible local score file.

    Format: first line is the variable count n; then, per variable, a line
    "NAME COUNT" followed by COUNT lines "SCORE k PARENT_1 ... PARENT_k"
    with parents given by name.  Score files carry no arity information, so
    VariableMeta.arity is set to the placeholder 2; only the scoring path
    (which starts from CSV data) ever consumes arity.
    """
    lines = [ln.strip() for ln in stream]
    lines = [ln for ln in lines if ln]
    pos = 0

    def take(what: str) -> str:
        nonlocal pos
        if pos >= len(lines):
            raise ScoreFileError(f"unexpected end of file, expected {what}")
        ln = lines[pos]
        pos += 1
        return ln

    try:
        n = int(take("variable count"))
    except ValueError:
        raise ScoreFileError("first line must be the variable count") from None
    if n <= 0:
        raise ScoreFileError("variable count must be positive")

    # Parents may name variables declared later, so locate all block headers
    # first, then resolve names in a second pass.
    blocks: list[tuple[str, int, list[str]]] = []
    for _ in range(n):
        head = take("a NAME COUNT line").split()
        if len(head) != 2:
            raise ScoreFileError(f"malformed variable header: {' '.join(head)!r}")
        name, count_s = head
        try:
            count = int(count_s)
        except ValueError:
            raise ScoreFileError(f"bad entry count for {name!r}") from None
        if count <= 0:
            raise ScoreFileError(f"variable {name!r} declares no entries")
        entry_lines = [take(f"entry {i + 1} of {name!r}") for i in range(count)]
        blocks.append((name, count, entry_lines))
    if pos != len(lines):
        raise ScoreFileError("trailing content after the last declared entry")

    names = [b[0] for b in blocks]
    if len(set(names)) != len(names):
        raise ScoreFileError("duplicate variable names")
    index = {nm: i for i, nm in enumerate(names)}

    entries: list[list[ParentSetEntry]] = []
    for v, (name, _, entry_lines) in enumerate(blocks):
        ents = []
        seen = set()
        for ln in entry_lines:
            fields = ln.split()
            if len(fields) < 2:
                raise ScoreFileError(f"malformed entry for {name!r}: {ln!r}")
            try:
                score = float(fields[0])
                k = int(fields[1])
            except ValueError:
                raise ScoreFileError(f"malformed entry for {name!r}: {ln!r}") from None
            if len(fields) != 2 + k:
                raise ScoreFileError(
                    f"entry for {name!r} declares {k} parents but lists "
                    f"{len(fields) - 2}"
                )
            parent_ids = []
            for pname in fields[2:]:
                if pname not in index:
                    raise ScoreFileError(f"unknown parent name {pname!r}")
                parent_ids.append(index[pname])
            parents = tuple(sorted(parent_ids))
            if len(set(parents)) != k:
                raise ScoreFileError(f"repeated parent in entry for {name!r}")
            if v in parents:
                raise ScoreFileError(f"variable {name!r} lists itself as a parent")
            if parents in seen:
                raise ScoreFileError(f"duplicate parent set for {name!r}")
            seen.add(parents)
            ents.append(ParentSetEntry(parents=parents, score=score))
        entries.append(ents)

    variables = [VariableMeta(id=i, name=nm, arity=2) for i, nm in enumerate(names)]
    return ScoreTable(variables=variables, entries=entries)


def write_score_file(table: ScoreTable, stream: IO[str]) -> None:
    """Write a score table in the GOBNILP-compatible text format.

    Variables are emitted in id order, entries in descending score order.
    Scores are written with repr, which round-trips floats exactly.
    """
    stream.write(f"{table.n}\n")
    for v in range(table.n):
        ents = table.entries[v]
        stream.write(f"{table.name_of(v)} {len(ents)}\n")
        for e in ents:
            names = " ".join(table.name_of(p) for p in e.parents)
            tail = f" {names}" if names else ""
            stream.write(f"{e.score!r} {len(e.parents)}{tail}\n")
