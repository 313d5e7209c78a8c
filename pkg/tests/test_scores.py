"""Scoring-path tests against independently coded log-gamma oracles."""

import io
import math

import numpy as np
import pytest

from bncut.generate import random_score_table
from bncut.scores import (
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


def make_dataset(arities, rows):
    variables = [
        VariableMeta(id=i, name=f"X{i}", arity=a) for i, a in enumerate(arities)
    ]
    return Dataset(variables=variables, rows=np.array(rows, dtype=np.int64))


# Oracle scoring paths built on math.gamma products rather than the
# package's lgamma sums.
def oracle_bdeu(n_ijk, r, ess):
    q = len(n_ijk)
    a_ij = ess / q
    a_ijk = ess / (q * r)
    value = 1.0
    for row in n_ijk:
        nij = sum(row)
        value *= math.gamma(a_ij) / math.gamma(a_ij + nij)
        for nijk in row:
            value *= math.gamma(a_ijk + nijk) / math.gamma(a_ijk)
    return math.log(value)


def oracle_k2(n_ijk, r):
    value = 1.0
    for row in n_ijk:
        nij = sum(row)
        value *= math.factorial(r - 1) / math.factorial(nij + r - 1)
        for nijk in row:
            value *= math.factorial(nijk)
    return math.log(value)


class TestLoadCsv:
    def test_basic_parse(self):
        data = load_csv(io.StringIO("A,B\n0,1\n1,0\n"))
        assert [v.name for v in data.variables] == ["A", "B"]
        assert all(v.arity == 2 for v in data.variables)
        assert data.instance_count == 2

    def test_labels_mapped_by_first_appearance(self):
        data = load_csv(io.StringIO("A\nyes\nno\nyes\n"))
        assert data.rows[:, 0].tolist() == [0, 1, 0]

    def test_header_only_is_an_error(self):
        with pytest.raises(DataFormatError, match="no data rows"):
            load_csv(io.StringIO("A,B\n"))

    def test_constant_column_is_an_error(self):
        with pytest.raises(DataFormatError, match="arity"):
            load_csv(io.StringIO("A,B\n0,1\n0,0\n"))

    def test_ragged_row_reports_line_number(self):
        with pytest.raises(DataFormatError, match="line 3"):
            load_csv(io.StringIO("A,B\n0,1\n0\n"))

    def test_duplicate_header(self):
        with pytest.raises(DataFormatError, match="duplicate"):
            load_csv(io.StringIO("A,A\n0,1\n1,0\n"))


class TestCounts:
    def test_two_instance_tally(self):
        data = make_dataset([2, 2], [[0, 0], [1, 1]])
        counts = count_configurations(data, child=0, parents=[1])
        assert counts.n_ijk.tolist() == [[1, 0], [0, 1]]
        assert counts.n_ij.tolist() == [1, 1]

    def test_empty_parent_set_gives_marginals(self):
        data = make_dataset([2, 2], [[0, 0], [1, 1], [1, 0]])
        counts = count_configurations(data, child=0, parents=[])
        assert counts.q == 1
        assert counts.n_ijk.tolist() == [[1, 2]]

    def test_three_valued_parent_uniform_spread(self):
        rows = [[0, 0], [1, 0], [0, 1], [1, 1], [0, 2], [1, 2]]
        data = make_dataset([2, 3], rows)
        counts = count_configurations(data, child=0, parents=[1])
        assert counts.q == 3
        assert counts.n_ij.tolist() == [2, 2, 2]

    def test_mixed_radix_uses_sorted_parent_order(self):
        rows = [[0, 1, 0], [1, 0, 1]]
        data = make_dataset([2, 2, 2], rows)
        counts = count_configurations(data, child=0, parents=[2, 1])
        # Sorted parents (1, 2): instance 0 has config 1*2+0=2, instance 1
        # has config 0*2+1=1.
        assert counts.parents == (1, 2)
        assert counts.n_ijk[2].tolist() == [1, 0]
        assert counts.n_ijk[1].tolist() == [0, 1]

    def test_total_mass_equals_instance_count(self):
        rng = np.random.default_rng(7)
        rows = rng.integers(0, 2, size=(40, 4))
        data = make_dataset([2, 2, 2, 2], rows)
        counts = count_configurations(data, child=2, parents=[0, 3])
        assert int(counts.n_ij.sum()) == 40


class TestBdeuFixtures:
    def test_binary_no_parents_counts_1_1(self):
        data = make_dataset([2], [[0], [1]])
        counts = count_configurations(data, 0, [])
        got = bdeu_local(counts, 2, ess=1.0)
        assert got == pytest.approx(math.log(1 / 8), abs=1e-9)
        assert got == pytest.approx(oracle_bdeu([[1, 1]], 2, 1.0), abs=1e-9)

    def test_zero_instances_scores_zero(self):
        data = make_dataset([2, 2], [[0, 0], [1, 1]])
        empty = Dataset(variables=data.variables, rows=np.empty((0, 2), dtype=int))
        counts = count_configurations(empty, 0, [1])
        assert bdeu_local(counts, 2, ess=1.0) == 0.0
        assert k2_local(counts, 2) == 0.0

    def test_binary_parent_two_instances(self):
        data = make_dataset([2, 2], [[0, 0], [1, 1]])
        counts = count_configurations(data, child=1, parents=[0])
        got = bdeu_local(counts, 2, ess=1.0)
        assert got == pytest.approx(2 * math.log(0.5), abs=1e-9)
        assert got == pytest.approx(oracle_bdeu([[1, 0], [0, 1]], 2, 1.0), abs=1e-9)

    def test_matches_oracle_on_random_counts(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            r = int(rng.integers(2, 4))
            q = int(rng.integers(1, 5))
            n_ijk = rng.integers(0, 6, size=(q, r))
            data_free = np.asarray(n_ijk)
            counts = _counts_from_matrix(data_free)
            ess = float(rng.uniform(0.5, 4.0))
            got = bdeu_local(counts, r, ess)
            want = oracle_bdeu(n_ijk.tolist(), r, ess)
            np.testing.assert_allclose(got, want, atol=1e-9)


def _counts_from_matrix(n_ijk):
    from bncut.scores import ContingencyCounts

    n_ijk = np.asarray(n_ijk, dtype=np.int64)
    return ContingencyCounts(
        child=0,
        parents=(1,),
        q=n_ijk.shape[0],
        n_ijk=n_ijk,
        n_ij=n_ijk.sum(axis=1),
    )


class TestK2Fixtures:
    def test_counts_1_1(self):
        got = k2_local(_counts_from_matrix([[1, 1]]), 2)
        assert got == pytest.approx(math.log(1 / 6), abs=1e-9)
        assert got == pytest.approx(oracle_k2([[1, 1]], 2), abs=1e-9)

    def test_counts_2_0(self):
        got = k2_local(_counts_from_matrix([[2, 0]]), 2)
        assert got == pytest.approx(math.log(1 / 3), abs=1e-9)

    def test_matches_oracle_on_random_counts(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            r = int(rng.integers(2, 4))
            q = int(rng.integers(1, 4))
            n_ijk = rng.integers(0, 5, size=(q, r))
            got = k2_local(_counts_from_matrix(n_ijk), r)
            np.testing.assert_allclose(got, oracle_k2(n_ijk.tolist(), r), atol=1e-9)


class TestScoreInvariances:
    def test_parent_and_instance_order_invariance(self):
        rng = np.random.default_rng(5)
        rows = rng.integers(0, 2, size=(30, 3))
        data = make_dataset([2, 2, 2], rows)
        shuffled = make_dataset([2, 2, 2], rows[rng.permutation(30)])
        a = bdeu_local(count_configurations(data, 0, [1, 2]), 2, 1.0)
        b = bdeu_local(count_configurations(data, 0, [2, 1]), 2, 1.0)
        c = bdeu_local(count_configurations(shuffled, 0, [1, 2]), 2, 1.0)
        assert a == pytest.approx(b, abs=1e-12)
        assert a == pytest.approx(c, abs=1e-12)

    def test_decomposability_fixed_dag_scored_two_ways(self):
        rng = np.random.default_rng(17)
        rows = rng.integers(0, 2, size=(60, 3))
        data = make_dataset([2, 2, 2], rows)
        dag = {0: (), 1: (0,), 2: (0, 1)}
        direct = sum(
            bdeu_local(count_configurations(data, v, ps), 2, 1.0)
            for v, ps in dag.items()
        )
        table = build_score_table(data, parent_limit=2, prune=False)
        via_table = 0.0
        for v, ps in dag.items():
            via_table += next(
                e.score for e in table.entries[v] if e.parents == ps
            )
        np.testing.assert_allclose(direct, via_table, atol=1e-12)


class TestPruning:
    def test_dominated_by_empty_set(self):
        entries = [
            ParentSetEntry(parents=(), score=-10.0),
            ParentSetEntry(parents=(1,), score=-12.0),
        ]
        kept = prune_dominated(entries)
        assert [e.parents for e in kept] == [()]

    def test_better_superset_survives(self):
        entries = [
            ParentSetEntry(parents=(), score=-10.0),
            ParentSetEntry(parents=(1,), score=-8.0),
        ]
        assert len(prune_dominated(entries)) == 2

    def test_transitive_dominance(self):
        entries = [
            ParentSetEntry(parents=(), score=-10.0),
            ParentSetEntry(parents=(1,), score=-9.0),
            ParentSetEntry(parents=(1, 2), score=-9.5),
        ]
        kept = prune_dominated(entries)
        assert [e.parents for e in kept] == [(), (1,)]

    def test_independent_uniform_data_keeps_only_empty(self):
        rng = np.random.default_rng(23)
        rows = rng.integers(0, 2, size=(600, 3))
        data = make_dataset([2, 2, 2], rows)
        table = build_score_table(data, parent_limit=2, prune=True)
        for v in range(3):
            assert [e.parents for e in table.entries[v]] == [()]


class TestBuildTable:
    def test_entry_counts_limit_two(self):
        data = make_dataset([2, 2, 2], [[0, 0, 0], [1, 1, 1], [0, 1, 0], [1, 0, 1]])
        table = build_score_table(data, parent_limit=2, prune=False)
        for v in range(3):
            assert len(table.entries[v]) == 4

    def test_limit_zero(self):
        data = make_dataset([2, 2], [[0, 0], [1, 1]])
        table = build_score_table(data, parent_limit=0)
        assert all(len(ents) == 1 for ents in table.entries)

    def test_limit_at_least_n_rejected(self):
        data = make_dataset([2, 2], [[0, 0], [1, 1]])
        with pytest.raises(ValueError):
            build_score_table(data, parent_limit=2)


TWO_VAR_FILE = """\
2
A 2
-1.5 1 B
-2.0 0
B 2
-2.25 0
-3.5 1 A
"""


class TestScoreFiles:
    def test_parse_two_variable_file(self):
        table = parse_score_file(io.StringIO(TWO_VAR_FILE))
        assert table.n == 2
        assert [len(ents) for ents in table.entries] == [2, 2]
        assert table.entries[0][0] == ParentSetEntry(parents=(1,), score=-1.5)

    def test_round_trip_random_tables(self):
        rng = np.random.default_rng(29)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            table = random_score_table(n, min(2, n - 1), rng)
            buf = io.StringIO()
            write_score_file(table, buf)
            buf.seek(0)
            again = parse_score_file(buf)
            assert again == table

    def test_writer_emits_descending_scores(self):
        rng = np.random.default_rng(31)
        table = random_score_table(4, 2, rng)
        buf = io.StringIO()
        write_score_file(table, buf)
        lines = buf.getvalue().splitlines()
        scores = []
        idx = 1
        for _ in range(4):
            count = int(lines[idx].split()[1])
            block = [float(lines[idx + 1 + i].split()[0]) for i in range(count)]
            assert block == sorted(block, reverse=True)
            scores.append(block)
            idx += 1 + count

    def test_unknown_parent_name(self):
        bad = "1\nA 1\n-1.0 1 Z\n"
        with pytest.raises(ScoreFileError, match="unknown parent"):
            parse_score_file(io.StringIO(bad))

    def test_count_mismatch(self):
        bad = "1\nA 3\n-1.0 0\n-2.0 0\n"
        with pytest.raises(ScoreFileError):
            parse_score_file(io.StringIO(bad))

    def test_duplicate_parent_set(self):
        bad = "2\nA 2\n-1.0 1 B\n-2.0 1 B\nB 1\n-1.0 0\n"
        with pytest.raises(ScoreFileError, match="duplicate parent set"):
            parse_score_file(io.StringIO(bad))

    def test_entry_with_wrong_parent_arity_count(self):
        bad = "2\nA 1\n-1.0 2 B\nB 1\n-1.0 0\n"
        with pytest.raises(ScoreFileError):
            parse_score_file(io.StringIO(bad))


def test_score_table_normalizes_entry_order():
    variables = [VariableMeta(0, "A", 2), VariableMeta(1, "B", 2)]
    entries = [
        [ParentSetEntry((1,), -1.0), ParentSetEntry((), -5.0)],
        [ParentSetEntry((), -2.0)],
    ]
    table = ScoreTable(variables=variables, entries=entries)
    assert [e.parents for e in table.entries[0]] == [(1,), ()]


def test_score_table_rejects_duplicates_and_self_parents():
    variables = [VariableMeta(0, "A", 2), VariableMeta(1, "B", 2)]
    with pytest.raises(ValueError):
        ScoreTable(
            variables=variables,
            entries=[[ParentSetEntry((0,), -1.0)], [ParentSetEntry((), -1.0)]],
        )
    with pytest.raises(ValueError):
        ScoreTable(
            variables=variables,
            entries=[
                [ParentSetEntry((), -1.0), ParentSetEntry((), -2.0)],
                [ParentSetEntry((), -1.0)],
            ],
        )
