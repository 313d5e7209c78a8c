"""Bounded-variable revised simplex and Gomory fractional cuts.

The engine keeps a dense basis inverse updated by eta transformations with
periodic refactorization, prices with Dantzig's rule, and falls back to
Bland's rule after a run of degenerate pivots.  Infeasible starting bases
(cold starts on equality/>= rows, warm starts after row additions) are
repaired by a phase-1 with artificial columns.  Gomory cuts are derived
from tableau rows in the shifted nonbasic space and substituted back to
structural columns only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

FEAS_TOL = 1e-7
INT_TOL = 1e-6
PIVOT_TOL = 1e-9
DUAL_TOL = 1e-7
DEGENERATE_LIMIT = 200
REFACTOR_EVERY = 100

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration_limit"

_NB_LO, _NB_UP, _BASIC = 0, 1, 2


class LpError(Exception):
    """Raised on malformed problems or numerically unusable states."""


class LpUnboundedError(LpError):
    """Raised when the objective is unbounded over the feasible region."""


@dataclass(frozen=True)
class LpRow:
    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float


@dataclass(frozen=True)
class Cut:
    """A valid inequality over structural columns.

    A cut with no coefficients is vacuous (lhs identically 0); such cuts
    can arise from clusters no column intersects and are never emitted by
    separation, since they cannot be violated.
    """

    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    origin: str

    def __post_init__(self) -> None:
        if self.sense not in ("<=", ">="):
            raise ValueError(f"bad cut sense {self.sense!r}")
        if not math.isfinite(self.rhs):
            raise ValueError("cut rhs must be finite")

    def violation(self, x: np.ndarray) -> float:
        """Positive when x violates the cut."""
        lhs = sum(a * x[j] for j, a in self.coeffs)
        return lhs - self.rhs if self.sense == "<=" else self.rhs - lhs


@dataclass(frozen=True)
class Basis:
    """Warm-start state: basic variable ids plus nonbasic-at-upper ids.

    Variable ids cover structural columns (0..n-1) and row slacks
    (n..n+m-1).
    """

    basic: tuple[int, ...]
    at_upper: frozenset[int]


@dataclass
class LpProblem:
    """max objective . x subject to rows, with finite column bounds."""

    num_cols: int
    objective: np.ndarray
    col_bounds: list[tuple[float, float]]
    rows: list[LpRow]
    integrality: list[bool]

    def __post_init__(self) -> None:
        self.objective = np.asarray(self.objective, dtype=float)
        if self.objective.shape != (self.num_cols,):
            raise LpError("objective length must equal num_cols")
        if len(self.col_bounds) != self.num_cols:
            raise LpError("col_bounds length must equal num_cols")
        if len(self.integrality) != self.num_cols:
            raise LpError("integrality length must equal num_cols")
        for lo, hi in self.col_bounds:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise LpError("column bounds must be finite")
            if not 0 <= lo <= hi:
                raise LpError("column bounds must satisfy 0 <= lo <= hi")
        for row in self.rows:
            if row.sense not in ("<=", "=", ">="):
                raise LpError(f"bad row sense {row.sense!r}")
            cols = [c for c, _ in row.coeffs]
            if any(c < 0 or c >= self.num_cols for c in cols):
                raise LpError("row references an out-of-range column")
            if len(set(cols)) != len(cols):
                raise LpError("row has duplicate columns")


@dataclass
class LpResult:
    status: str
    x: np.ndarray
    objective: float
    basis: Basis | None
    pivots: int


def add_rows(problem: LpProblem, cuts: list[Cut]) -> LpProblem:
    """Return the problem with the cuts appended as rows.

    A previously exported Basis stays a valid warm start: new-row slacks
    are added as basic and any resulting bound violation is repaired by
    phase 1.
    """
    if not cuts:
        return problem
    new_rows = list(problem.rows) + [
        LpRow(coeffs=tuple(c.coeffs), sense=c.sense, rhs=c.rhs) for c in cuts
    ]
    return replace(problem, rows=new_rows)


class _Engine:
    """Mutable solver state for one LpProblem."""

    def __init__(self, problem: LpProblem, max_iter: int | None = None):
        self.problem = problem
        n = problem.num_cols
        m = len(problem.rows)
        self.n = n
        self.m = m
        width = n + m
        A = np.zeros((m, width))
        b = np.zeros(m)
        lo = np.zeros(width)
        hi = np.zeros(width)
        lo[:n] = [bd[0] for bd in problem.col_bounds]
        hi[:n] = [bd[1] for bd in problem.col_bounds]
        for i, row in enumerate(problem.rows):
            for c, a in row.coeffs:
                A[i, c] = a
            A[i, n + i] = 1.0
            b[i] = row.rhs
            if row.sense == "<=":
                lo[n + i], hi[n + i] = 0.0, math.inf
            elif row.sense == ">=":
                lo[n + i], hi[n + i] = -math.inf, 0.0
            else:
                lo[n + i], hi[n + i] = 0.0, 0.0
        self.A = A
        self.b = b
        self.lo = lo
        self.hi = hi
        self.c = np.concatenate([problem.objective, np.zeros(m)])
        self.max_iter = max_iter if max_iter is not None else 50 * (m + n + 1)
        self.pivots = 0
        self.art_ids: list[int] = []
        # Set by _load_basis.
        self.basic = np.empty(0, dtype=np.int64)
        self.status = np.empty(0, dtype=np.int8)
        self.Binv = np.empty((m, m))
        self.x = np.empty(0)
        self._since_refactor = 0

    @property
    def width(self) -> int:
        return self.A.shape[1]

    def _cold_basis(self) -> None:
        self.basic = np.arange(self.n, self.n + self.m, dtype=np.int64)
        self.status = np.full(self.width, _NB_LO, dtype=np.int8)
        self.status[self.basic] = _BASIC
        self.Binv = np.eye(self.m)
        self._recompute_x()

    def _load_basis(self, warm: Basis | None) -> None:
        if warm is None:
            self._cold_basis()
            return
        basic = list(warm.basic)
        if len(basic) < self.m:
            # Basis exported before rows were appended: the new rows enter
            # with their own slacks basic; phase 1 repairs any violation.
            basic.extend(range(self.n + len(basic), self.n + self.m))
        usable = (
            len(basic) == self.m
            and len(set(basic)) == self.m
            and all(0 <= v < self.n + self.m for v in basic)
        )
        if not usable:
            self._cold_basis()
            return
        self.basic = np.array(basic, dtype=np.int64)
        self.status = np.full(self.width, _NB_LO, dtype=np.int8)
        for j in warm.at_upper:
            if j < self.width and math.isfinite(self.hi[j]):
                self.status[j] = _NB_UP
        # >= slacks have no finite lower bound; nonbasic ones sit at 0.
        for j in range(self.n, self.width):
            if self.status[j] == _NB_LO and not math.isfinite(self.lo[j]):
                self.status[j] = _NB_UP
        self.status[self.basic] = _BASIC
        try:
            self.Binv = np.linalg.inv(self.A[:, self.basic])
        except np.linalg.LinAlgError:
            self._cold_basis()
            return
        if not np.all(np.isfinite(self.Binv)):
            self._cold_basis()
            return
        self._recompute_x()

    def _nonbasic_value(self, j: int) -> float:
        if self.status[j] == _NB_UP:
            return self.hi[j]
        v = self.lo[j]
        return v if math.isfinite(v) else 0.0

    def _recompute_x(self) -> None:
        x = np.zeros(self.width)
        for j in range(self.width):
            if self.status[j] != _BASIC:
                x[j] = self._nonbasic_value(j)
        resid = self.b - self.A @ x
        x[self.basic] = self.Binv @ resid
        self.x = x

    def _refactor(self) -> None:
        self.Binv = np.linalg.inv(self.A[:, self.basic])
        self._recompute_x()
        self._since_refactor = 0

    def _violated_positions(self) -> np.ndarray:
        xb = self.x[self.basic]
        lo_b = self.lo[self.basic]
        hi_b = self.hi[self.basic]
        bad = (xb < lo_b - FEAS_TOL) | (xb > hi_b + FEAS_TOL)
        # Artificials are their own phase-1 responsibility.
        for pos, var in enumerate(self.basic):
            if var >= self.n + self.m:
                bad[pos] = False
        return np.flatnonzero(bad)

    def _add_artificial(self, row: int) -> int:
        col = np.zeros((self.m, 1))
        col[row, 0] = 1.0
        self.A = np.hstack([self.A, col])
        self.lo = np.append(self.lo, 0.0)
        self.hi = np.append(self.hi, math.inf)
        self.c = np.append(self.c, 0.0)
        self.status = np.append(self.status, np.int8(_BASIC))
        art = self.width - 1
        self.art_ids.append(art)
        return art

    def _install_artificials(self) -> bool:
        """Swap out-of-bound basic variables for artificial columns.

        Returns True when any artificial was installed.  One swap per
        refactor: the artificial at basis position pos is the unit column
        e_r with r chosen so Binv[pos, r] is nonzero, which keeps the basis
        nonsingular regardless of how the warm basis is permuted.
        Artificials are kept nonnegative by sign choice.
        """
        installed = False
        for _ in range(self.m + 1):
            bad = self._violated_positions()
            if bad.size == 0:
                break
            pos = int(bad[0])
            var = int(self.basic[pos])
            if self.x[var] < self.lo[var]:
                self.status[var] = _NB_LO
            else:
                self.status[var] = _NB_UP
            row = int(np.argmax(np.abs(self.Binv[pos, :])))
            art = self._add_artificial(row)
            self.basic[pos] = art
            self._refactor()
            # Flip artificial columns whose basic value came out negative.
            flipped = False
            for p, v in enumerate(self.basic):
                if v >= self.n + self.m and self.x[v] < 0:
                    self.A[:, v] = -self.A[:, v]
                    self.Binv[p, :] = -self.Binv[p, :]
                    flipped = True
            if flipped:
                self._recompute_x()
            installed = True
        return installed

    def _retire_artificials(self) -> None:
        """Fix artificials at zero; pivot basic ones out where possible."""
        art_set = set(self.art_ids)
        for pos in range(self.m):
            var = int(self.basic[pos])
            if var not in art_set:
                continue
            trow = self.Binv[pos] @ self.A
            pivot_col = -1
            for j in range(self.n + self.m):
                if self.status[j] == _BASIC or self.lo[j] == self.hi[j]:
                    continue
                if abs(trow[j]) > PIVOT_TOL:
                    pivot_col = j
                    break
            if pivot_col >= 0:
                self._pivot(pivot_col, pos, 0.0, +1 if self.status[pivot_col] == _NB_LO else -1)
        for art in self.art_ids:
            self.lo[art] = 0.0
            self.hi[art] = 0.0
            if self.status[art] != _BASIC:
                self.status[art] = _NB_LO
                self.x[art] = 0.0

    def _pivot(self, entering: int, leave_pos: int, t: float, sgn: int) -> None:
        w = self.Binv @ self.A[:, entering]
        leaving = int(self.basic[leave_pos])
        if t != 0.0:
            self.x[self.basic] -= t * sgn * w
            self.x[entering] += sgn * t
        if sgn * w[leave_pos] > 0:
            self.x[leaving] = self.lo[leaving]
            self.status[leaving] = _NB_LO
        else:
            self.x[leaving] = self.hi[leaving]
            self.status[leaving] = _NB_UP
        self.status[entering] = _BASIC
        self.basic[leave_pos] = entering
        wr = w[leave_pos]
        if abs(wr) < PIVOT_TOL:
            self._refactor()
            return
        brow = self.Binv[leave_pos] / wr
        w_rest = w.copy()
        w_rest[leave_pos] = 0.0
        self.Binv -= np.outer(w_rest, brow)
        self.Binv[leave_pos] = brow
        self._since_refactor += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self._refactor()

    def _iterate(self, cvec: np.ndarray) -> str:
        degen_run = 0
        bland = False
        fixed = self.lo == self.hi
        while True:
            if self.pivots >= self.max_iter:
                return ITERATION_LIMIT
            y = self.Binv.T @ cvec[self.basic]
            d = cvec - y @ self.A
            open_lo = (self.status == _NB_LO) & ~fixed & (d > DUAL_TOL)
            open_up = (self.status == _NB_UP) & ~fixed & (d < -DUAL_TOL)
            if not (open_lo.any() or open_up.any()):
                return OPTIMAL
            if bland:
                entering = int(np.flatnonzero(open_lo | open_up)[0])
            else:
                score = np.where(open_lo, d, 0.0) + np.where(open_up, -d, 0.0)
                entering = int(np.argmax(score))
            sgn = +1 if self.status[entering] == _NB_LO else -1
            w = self.Binv @ self.A[:, entering]
            sw = sgn * w
            xb = self.x[self.basic]
            lo_b = self.lo[self.basic]
            hi_b = self.hi[self.basic]
            limits = np.full(self.m, math.inf)
            dec = sw > PIVOT_TOL
            inc = sw < -PIVOT_TOL
            with np.errstate(invalid="ignore"):
                limits[dec] = (xb[dec] - lo_b[dec]) / sw[dec]
                limits[inc] = (xb[inc] - hi_b[inc]) / sw[inc]
            limits[~np.isfinite(limits)] = math.inf
            np.maximum(limits, 0.0, out=limits)
            t_basic = limits.min() if self.m else math.inf
            t_flip = self.hi[entering] - self.lo[entering]
            self.pivots += 1
            if t_flip <= t_basic:
                if not math.isfinite(t_flip):
                    raise LpUnboundedError("objective direction is unbounded")
                self.x[self.basic] = xb - t_flip * sw
                self.x[entering] = (
                    self.hi[entering] if sgn > 0 else self.lo[entering]
                )
                self.status[entering] = _NB_UP if sgn > 0 else _NB_LO
                step = t_flip
            else:
                if not math.isfinite(t_basic):
                    raise LpUnboundedError("objective direction is unbounded")
                cand = np.flatnonzero(limits <= t_basic + 1e-12)
                leave_pos = int(cand[np.argmax(np.abs(w[cand]))])
                self._pivot(entering, leave_pos, t_basic, sgn)
                step = t_basic
            if step <= PIVOT_TOL:
                degen_run += 1
                if degen_run > DEGENERATE_LIMIT:
                    bland = True
            else:
                degen_run = 0
                bland = False

    def infeasibility(self) -> float:
        total = 0.0
        for art in self.art_ids:
            total += abs(self.x[art])
        xb = self.x[self.basic]
        lo_b = self.lo[self.basic]
        hi_b = self.hi[self.basic]
        total += float(np.clip(lo_b - xb, 0, None).sum())
        total += float(np.clip(xb - hi_b, 0, None).sum())
        return total

    def export_basis(self) -> Basis:
        ids = []
        for pos in range(self.m):
            var = int(self.basic[pos])
            if var >= self.n + self.m:
                # Redundant-row artificial: record the row's own slack; a
                # clashing or singular result is caught on warm load.
                var = self.n + pos
            ids.append(var)
        at_upper = frozenset(
            int(j)
            for j in range(self.n + self.m)
            if self.status[j] == _NB_UP
        )
        return Basis(basic=tuple(ids), at_upper=at_upper)

    def result(self, status: str) -> LpResult:
        xs = self.x[: self.n].copy()
        if status == OPTIMAL:
            objective = float(self.problem.objective @ xs)
            basis = self.export_basis()
        else:
            objective = math.nan
            basis = None
        return LpResult(
            status=status, x=xs, objective=objective, basis=basis, pivots=self.pivots
        )


def solve_lp(
    problem: LpProblem,
    warm_basis: Basis | None = None,
    max_iter: int | None = None,
) -> LpResult:
    """Solve the relaxation of the problem (integrality ignored).

    Deterministic given identical input and basis.  Returns status
    "optimal", "infeasible" (phase-1 residual above tolerance), or
    "iteration_limit" after 50*(rows+cols) pivots by default.
    """
    engine = _Engine(problem, max_iter=max_iter)
    engine._load_basis(warm_basis)
    if engine._install_artificials():
        phase1 = np.zeros(engine.width)
        for art in engine.art_ids:
            phase1[art] = -1.0
        status = engine._iterate(phase1)
        if status != OPTIMAL:
            return engine.result(status)
        art_mass = sum(abs(engine.x[a]) for a in engine.art_ids)
        if art_mass > FEAS_TOL:
            return engine.result(INFEASIBLE)
        engine._retire_artificials()
    cvec = np.zeros(engine.width)
    cvec[: engine.n + engine.m] = engine.c[: engine.n + engine.m]
    status = engine._iterate(cvec)
    if status == OPTIMAL and engine.infeasibility() > FEAS_TOL:
        # Numerical drift; one refactorization retry before giving up.
        engine._refactor()
        if engine.infeasibility() > FEAS_TOL:
            return engine.result(INFEASIBLE)
    return engine.result(status)


def _integral(value: float, tol: float = 1e-9) -> bool:
    return abs(value - round(value)) < tol


def gomory_cuts(
    problem: LpProblem, result: LpResult, max_cuts: int = 10
) -> list[Cut]:
    """Derive Gomory fractional cuts from the optimal tableau.

    Rows qualify when their basic variable is a fractional
    integrality-flagged structural column and every nonbasic variable with
    a nonzero tableau coefficient is integer-safe (an integer structural
    column with integer bounds, or the slack of an all-integer row).  The
    derivation shifts nonbasic variables to their active bounds, so each
    returned cut is violated by result.x by at least the basic variable's
    fractional part; slacks are substituted out so cuts reference
    structural columns only.
    """
    if result.status != OPTIMAL or result.basis is None:
        raise LpError("gomory_cuts needs an optimal result with a basis")
    if max_cuts <= 0:
        return []
    n = problem.num_cols
    m = len(problem.rows)
    A = np.zeros((m, n + m))
    b = np.zeros(m)
    lo = np.zeros(n + m)
    hi = np.zeros(n + m)
    lo[:n] = [bd[0] for bd in problem.col_bounds]
    hi[:n] = [bd[1] for bd in problem.col_bounds]
    slack_ok = np.zeros(m, dtype=bool)
    for i, row in enumerate(problem.rows):
        for c, a in row.coeffs:
            A[i, c] = a
        A[i, n + i] = 1.0
        b[i] = row.rhs
        if row.sense == "<=":
            lo[n + i], hi[n + i] = 0.0, math.inf
        elif row.sense == ">=":
            lo[n + i], hi[n + i] = -math.inf, 0.0
        else:
            lo[n + i], hi[n + i] = 0.0, 0.0
        slack_ok[i] = _integral(row.rhs) and all(
            _integral(a) for _, a in row.coeffs
        )
    struct_ok = np.array(
        [
            problem.integrality[j] and _integral(lo[j]) and _integral(hi[j])
            for j in range(n)
        ]
    )
    basic = np.array(result.basis.basic, dtype=np.int64)
    if len(basic) != m or len(set(basic.tolist())) != m:
        raise LpError("basis does not match the problem")
    try:
        Binv = np.linalg.inv(A[:, basic])
    except np.linalg.LinAlgError:
        return []
    x = np.zeros(n + m)
    x[:n] = result.x
    for i in range(m):
        x[n + i] = b[i] - A[i, :n] @ result.x
    in_basis = np.zeros(n + m, dtype=bool)
    in_basis[basic] = True
    at_upper = result.basis.at_upper

    candidates = []
    for pos in range(m):
        bv = int(basic[pos])
        if bv >= n or not problem.integrality[bv]:
            continue
        frac = x[bv] - math.floor(x[bv])
        if INT_TOL <= frac <= 1 - INT_TOL:
            candidates.append((abs(frac - 0.5), pos, frac))
    candidates.sort()

    cuts: list[Cut] = []
    for _, pos, f0 in candidates:
        if len(cuts) >= max_cuts:
            break
        trow = Binv[pos] @ A
        beta = np.zeros(n)
        const = 0.0
        usable = True
        any_term = False
        for j in range(n + m):
            if in_basis[j] or lo[j] == hi[j]:
                continue
            tj = trow[j]
            if abs(tj) <= 1e-9:
                continue
            if j < n:
                if not struct_ok[j]:
                    usable = False
                    break
            elif not slack_ok[j - n]:
                usable = False
                break
            up = j in at_upper
            d = -tj if up else tj
            fj = 0.0 if _integral(d) else d - math.floor(d)
            if fj == 0.0:
                continue
            any_term = True
            if j < n:
                if up:
                    beta[j] -= fj
                    const += fj * hi[j]
                else:
                    beta[j] += fj
                    const -= fj * lo[j]
            else:
                row = problem.rows[j - n]
                if up:
                    for c, a in row.coeffs:
                        beta[c] += fj * a
                    const -= fj * row.rhs
                else:
                    for c, a in row.coeffs:
                        beta[c] -= fj * a
                    const += fj * row.rhs
        if not usable or not any_term:
            continue
        rhs = f0 - const
        coeffs = tuple(
            (j, float(beta[j])) for j in range(n) if abs(beta[j]) > 1e-12
        )
        if not coeffs:
            continue
        cut = Cut(coeffs=coeffs, sense=">=", rhs=rhs, origin="gomory")
        if cut.violation(result.x) <= 1e-9:
            continue
        cuts.append(cut)
    return cuts
