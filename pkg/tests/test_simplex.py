"""LP engine tests: hand examples, a scipy oracle, and Gomory validity."""

import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from bncut.simplex import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    Cut,
    LpProblem,
    LpRow,
    add_rows,
    gomory_cuts,
    solve_lp,
)


def make_problem(c, bounds, rows, integrality=None):
    n = len(c)
    lp_rows = [
        LpRow(coeffs=tuple((j, float(a)) for j, a in coeffs), sense=sense, rhs=float(r))
        for coeffs, sense, r in rows
    ]
    return LpProblem(
        num_cols=n,
        objective=np.array(c, dtype=float),
        col_bounds=[(float(lo), float(hi)) for lo, hi in bounds],
        rows=lp_rows,
        integrality=list(integrality) if integrality is not None else [False] * n,
    )


def scipy_solve(problem):
    """Reference solve via scipy.optimize.linprog (HiGHS)."""
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    n = problem.num_cols
    for row in problem.rows:
        dense = np.zeros(n)
        for j, a in row.coeffs:
            dense[j] = a
        if row.sense == "<=":
            a_ub.append(dense)
            b_ub.append(row.rhs)
        elif row.sense == ">=":
            a_ub.append(-dense)
            b_ub.append(-row.rhs)
        else:
            a_eq.append(dense)
            b_eq.append(row.rhs)
    res = linprog(
        -problem.objective,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=problem.col_bounds,
        method="highs",
    )
    return res


def check_feasible(problem, x, tol=1e-7):
    for j, (lo, hi) in enumerate(problem.col_bounds):
        assert lo - tol <= x[j] <= hi + tol
    for row in problem.rows:
        lhs = sum(a * x[j] for j, a in row.coeffs)
        if row.sense == "<=":
            assert lhs <= row.rhs + tol
        elif row.sense == ">=":
            assert lhs >= row.rhs - tol
        else:
            assert abs(lhs - row.rhs) <= tol


class TestSolveLp:
    def test_single_binding_row(self):
        p = make_problem([1, 1], [(0, 1), (0, 1)], [([(0, 1), (1, 1)], "<=", 1)])
        res = solve_lp(p)
        assert res.status == OPTIMAL
        assert res.objective == pytest.approx(1.0, abs=1e-9)

    def test_infeasible_bound_row_conflict(self):
        p = make_problem([1], [(0, 1)], [([(0, 1)], ">=", 2)])
        res = solve_lp(p)
        assert res.status == INFEASIBLE

    def test_two_by_two_binding_system(self):
        p = make_problem(
            [1, 1],
            [(0, 2), (0, 2)],
            [([(0, 2), (1, 1)], "<=", 3), ([(0, 1), (1, 3)], "<=", 4)],
        )
        res = solve_lp(p)
        assert res.status == OPTIMAL
        np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-8)
        assert res.objective == pytest.approx(2.0, abs=1e-9)

    def test_equality_rows(self):
        p = make_problem(
            [3, 1],
            [(0, 5), (0, 5)],
            [([(0, 1), (1, 1)], "=", 4), ([(0, 1)], "<=", 3)],
        )
        res = solve_lp(p)
        assert res.status == OPTIMAL
        np.testing.assert_allclose(res.x, [3.0, 1.0], atol=1e-8)

    def test_no_rows_pushes_to_profitable_bounds(self):
        p = make_problem([2, -1], [(0, 3), (1, 4)], [])
        res = solve_lp(p)
        assert res.status == OPTIMAL
        np.testing.assert_allclose(res.x, [3.0, 1.0], atol=1e-12)

    def test_iteration_limit_status(self):
        p = make_problem([1, 1], [(0, 1), (0, 1)], [([(0, 1), (1, 1)], "<=", 1)])
        res = solve_lp(p, max_iter=0)
        assert res.status == ITERATION_LIMIT

    def test_determinism_bitwise(self):
        rng = np.random.default_rng(3)
        p = _random_problem(rng, 8, 6)
        a = solve_lp(p)
        b = solve_lp(p)
        assert a.status == b.status
        assert a.x.tobytes() == b.x.tobytes()


def _random_problem(rng, max_cols, max_rows):
    n = int(rng.integers(2, max_cols + 1))
    m = int(rng.integers(1, max_rows + 1))
    c = rng.integers(-5, 6, size=n) + rng.uniform(-0.5, 0.5, size=n)
    bounds = []
    for _ in range(n):
        lo = int(rng.integers(0, 2))
        hi = lo + int(rng.integers(1, 4))
        bounds.append((lo, hi))
    rows = []
    for _ in range(m):
        support = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
        coeffs = [(int(j), int(rng.integers(-3, 4))) for j in support]
        coeffs = [(j, a) for j, a in coeffs if a != 0]
        if not coeffs:
            coeffs = [(int(support[0]), 1)]
        sense = rng.choice(["<=", "<=", ">=", "="])
        # Keep a reasonable chance of feasibility: anchor rhs near the value
        # at the bound box center.
        center = sum(a * (bounds[j][0] + bounds[j][1]) / 2 for j, a in coeffs)
        rhs = center + int(rng.integers(-2, 5))
        rows.append((coeffs, str(sense), rhs))
    return make_problem(c, bounds, rows, integrality=[True] * n)


def random_integer_program(rng, max_cols=6):
    """Knapsack-shaped all-integer program likely to have a fractional LP
    optimum; shared with the acceptance suite."""
    n = int(rng.integers(2, max_cols + 1))
    m = int(rng.integers(1, 4))
    c = rng.integers(1, 6, size=n).astype(float)
    bounds = [(0, int(rng.integers(1, 4))) for _ in range(n)]
    rows = []
    for _ in range(m):
        coeffs = [(j, int(a)) for j, a in enumerate(rng.integers(0, 4, size=n)) if a]
        if not coeffs:
            coeffs = [(0, 1)]
        max_lhs = sum(a * bounds[j][1] for j, a in coeffs)
        rhs = int(rng.integers(1, max(2, max_lhs)))
        rows.append((coeffs, "<=", rhs))
    return make_problem(c, bounds, rows, integrality=[True] * n)


class TestAgainstScipy:
    def test_random_lps_match_reference(self):
        rng = np.random.default_rng(42)
        optimal_seen = 0
        for _ in range(60):
            p = _random_problem(rng, 8, 6)
            res = solve_lp(p)
            ref = scipy_solve(p)
            if ref.status == 2:
                assert res.status == INFEASIBLE
                continue
            assert ref.status == 0, f"unexpected reference status {ref.status}"
            assert res.status == OPTIMAL
            check_feasible(p, res.x)
            np.testing.assert_allclose(res.objective, -ref.fun, atol=1e-6)
            optimal_seen += 1
        assert optimal_seen >= 20


class TestAddRows:
    def _base(self):
        return make_problem(
            [1, 1],
            [(0, 2), (0, 2)],
            [([(0, 2), (1, 1)], "<=", 3), ([(0, 1), (1, 3)], "<=", 4)],
        )

    def test_zero_cuts_identity(self):
        p = self._base()
        assert add_rows(p, []) is p

    def test_satisfied_cut_keeps_objective(self):
        p = self._base()
        first = solve_lp(p)
        cut = Cut(coeffs=((0, 1.0),), sense="<=", rhs=5.0, origin="cluster")
        again = solve_lp(add_rows(p, [cut]), warm_basis=first.basis)
        assert again.status == OPTIMAL
        assert again.objective == pytest.approx(first.objective, abs=1e-9)

    def test_violated_cut_decreases_objective(self):
        p = self._base()
        first = solve_lp(p)
        cut = Cut(coeffs=((0, 1.0),), sense="<=", rhs=0.0, origin="cluster")
        again = solve_lp(add_rows(p, [cut]), warm_basis=first.basis)
        assert again.status == OPTIMAL
        assert again.objective < first.objective - 1e-9
        assert again.objective == pytest.approx(4 / 3, abs=1e-8)

    def test_warm_start_beats_cold_start_in_pivots(self):
        rng = np.random.default_rng(7)
        warm_wins = []
        for _ in range(45):
            p = _random_problem(rng, 8, 5)
            first = solve_lp(p)
            if first.status != OPTIMAL:
                continue
            # A cut that trims the optimum slightly.
            nz = [(int(j), float(c)) for j, c in enumerate(p.objective) if c]
            if not nz:
                continue
            cut = Cut(
                coeffs=tuple(nz),
                sense="<=",
                rhs=float(first.objective - 0.05),
                origin="cluster",
            )
            bigger = add_rows(p, [cut])
            warm = solve_lp(bigger, warm_basis=first.basis)
            cold = solve_lp(bigger)
            if warm.status != OPTIMAL or cold.status != OPTIMAL:
                continue
            warm_wins.append((warm.pivots, cold.pivots))
        assert len(warm_wins) >= 20
        warm_med = float(np.median([w for w, _ in warm_wins]))
        cold_med = float(np.median([c for _, c in warm_wins]))
        assert warm_med < cold_med


def enumerate_integer_points(problem):
    """Exhaustive integer feasible set; bounds are small by construction."""
    ranges = [
        range(int(math.ceil(lo)), int(math.floor(hi)) + 1)
        for lo, hi in problem.col_bounds
    ]
    points = []
    for pt in itertools.product(*ranges):
        ok = True
        for row in problem.rows:
            lhs = sum(a * pt[j] for j, a in row.coeffs)
            if row.sense == "<=" and lhs > row.rhs + 1e-9:
                ok = False
            elif row.sense == ">=" and lhs < row.rhs - 1e-9:
                ok = False
            elif row.sense == "=" and abs(lhs - row.rhs) > 1e-9:
                ok = False
            if not ok:
                break
        if ok:
            points.append(pt)
    return points


class TestGomory:
    def test_integral_optimum_gives_no_cuts(self):
        p = make_problem(
            [1], [(0, 1)], [([(0, 1)], "<=", 1)], integrality=[True]
        )
        res = solve_lp(p)
        assert gomory_cuts(p, res) == []

    def test_fractional_knapsack_cut_is_valid(self):
        # max x2 with 3x1 + 2x2 <= 5 on [0,3]^2 stops at x2 = 2.5.
        p = make_problem(
            [0, 1],
            [(0, 3), (0, 3)],
            [([(0, 3), (1, 2)], "<=", 5)],
            integrality=[True, True],
        )
        res = solve_lp(p)
        assert res.x[1] == pytest.approx(2.5, abs=1e-9)
        cuts = gomory_cuts(p, res)
        assert cuts
        for cut in cuts:
            assert cut.violation(res.x) > 1e-9
            for pt in enumerate_integer_points(p):
                assert cut.violation(np.array(pt, dtype=float)) <= 1e-7

    def test_max_cuts_caps_output(self):
        rows = [([(j, 2)], "<=", 1) for j in range(3)]
        p = make_problem(
            [1, 1, 1],
            [(0, 1)] * 3,
            rows,
            integrality=[True] * 3,
        )
        res = solve_lp(p)
        np.testing.assert_allclose(res.x, [0.5] * 3, atol=1e-9)
        cuts = gomory_cuts(p, res, max_cuts=1)
        assert len(cuts) == 1

    def test_cuts_reference_structural_columns_only(self):
        p = make_problem(
            [0, 1],
            [(0, 3), (0, 3)],
            [([(0, 3), (1, 2)], "<=", 5)],
            integrality=[True, True],
        )
        res = solve_lp(p)
        for cut in gomory_cuts(p, res):
            for j, _ in cut.coeffs:
                assert 0 <= j < p.num_cols

    def test_validity_on_random_integer_programs(self):
        rng = np.random.default_rng(1234)
        programs_with_cuts = 0
        for _ in range(120):
            p = random_integer_program(rng)
            res = solve_lp(p)
            if res.status != OPTIMAL:
                continue
            cuts = gomory_cuts(p, res)
            if not cuts:
                continue
            programs_with_cuts += 1
            points = enumerate_integer_points(p)
            for cut in cuts:
                assert cut.violation(res.x) > 1e-9
                for pt in points:
                    assert cut.violation(np.array(pt, dtype=float)) <= 1e-7
        assert programs_with_cuts >= 30
