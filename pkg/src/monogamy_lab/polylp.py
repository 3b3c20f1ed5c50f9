"""Exact linear programming over behavior variables.

A dense two-phase primal simplex on rational arithmetic: instances here are
small (hundreds of variables) and the point of the exercise is certified
equalities, which floats cannot provide.  Dantzig pricing by default with a
permanent switch to Bland's rule after a run of degenerate pivots, which
guarantees termination.  gmpy2 rationals are used internally when available
(they are several times faster); the public interface speaks Fraction.

Also provides canned constraint generators for the no-signalling polytope:
per-column normalization plus, for every party, independence of every other
party's marginal from that party's setting choice (pairwise against setting
0), which together with nonnegativity carve out exactly the valid
nonsignalling behaviors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .scenario import Behavior, Scenario, format_number

try:
    from gmpy2 import mpq as _rat
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _rat = Fraction

_ZERO = _rat(0)
_ONE = _rat(1)


def _to_fraction(v) -> Fraction:
    return Fraction(int(v.numerator), int(v.denominator))


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """min/max objective . x subject to eq_rows . x = eq_rhs,
    ub_rows . x <= ub_rhs and lower <= x <= upper (None = unbounded side).

    Default bounds are x >= 0.
    """

    n_vars: int
    objective: list
    sense: str = "min"
    eq_rows: list = field(default_factory=list)
    eq_rhs: list = field(default_factory=list)
    ub_rows: list = field(default_factory=list)
    ub_rhs: list = field(default_factory=list)
    lower: list | None = None  # default 0 per variable
    upper: list | None = None  # default unbounded above

    def __post_init__(self) -> None:
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        if len(self.objective) != self.n_vars:
            raise ValueError("objective length mismatch")
        for row in self.eq_rows:
            if len(row) != self.n_vars:
                raise ValueError("equality row length mismatch")
        for row in self.ub_rows:
            if len(row) != self.n_vars:
                raise ValueError("inequality row length mismatch")
        if len(self.eq_rows) != len(self.eq_rhs) or len(self.ub_rows) != len(self.ub_rhs):
            raise ValueError("rhs length mismatch")


@dataclass
class LPSolution:
    """Solver outcome.  For status 'optimal' in exact mode the point
    satisfies every constraint exactly and achieves the reported value;
    basis and duals come from the final tableau and let
    :func:`verify_certificate` re-check optimality independently of the
    pivot arithmetic.  Float-mode solutions carry a reported tolerance
    instead of certificates."""

    status: str
    value: Fraction | None = None
    point: tuple | None = None
    basis: tuple | None = None
    dual: tuple | None = None  # one multiplier per standardized row
    iterations: int = 0
    tolerance: float | None = None

    def behavior(self, scenario: Scenario) -> Behavior:
        if self.point is None:
            raise ValueError(f"no optimizer point (status {self.status})")
        return Behavior(scenario, self.point)


def _standardize(lp: LinearProgram):
    """Rewrite as min c.x, A x = b, x >= 0 (variables shifted/split, slacks
    appended, duplicate rows dropped).

    Returns (rows, rhs, c, const, sign, rep, n_struct, n_slack) where rep
    maps each original variable to its standard columns and shift, const and
    sign restore the original objective value.
    """
    n = lp.n_vars
    lower = lp.lower if lp.lower is not None else [Fraction(0)] * n
    upper = lp.upper if lp.upper is not None else [None] * n

    # Original variable j is represented as a nonnegative combination:
    #   x_j = lo + x'_p          (finite lower bound)
    #   x_j = x'_p - x'_q        (free variable)
    rep = []  # per original var: (pos_col, neg_col or None, shift)
    cols = 0
    for j in range(n):
        lo = lower[j]
        if lo is None:
            rep.append((cols, cols + 1, Fraction(0)))
            cols += 2
        else:
            rep.append((cols, None, Fraction(lo)))
            cols += 1

    rows: list[list] = []
    rhs: list = []

    def add_row(coeffs: Sequence, b) -> None:
        row = [_ZERO] * cols
        shift_total = _rat(0)
        for j, v in enumerate(coeffs):
            if v == 0:
                continue
            p, q, shift = rep[j]
            vq = _rat(v)
            row[p] += vq
            if q is not None:
                row[q] -= vq
            if shift:
                shift_total += vq * _rat(shift)
        rows.append(row)
        rhs.append(_rat(b) - shift_total)

    for row, b in zip(lp.eq_rows, lp.eq_rhs):
        add_row(row, b)
    n_eq = len(rows)
    for row, b in zip(lp.ub_rows, lp.ub_rhs):
        add_row(row, b)
    for j in range(n):
        if upper[j] is not None:
            coeffs = [0] * n
            coeffs[j] = 1
            add_row(coeffs, upper[j])

    c = [_ZERO] * cols
    sign = _rat(1) if lp.sense == "min" else _rat(-1)
    const = _rat(0)
    for j, v in enumerate(lp.objective):
        if v == 0:
            continue
        p, q, shift = rep[j]
        vq = sign * _rat(v)
        c[p] += vq
        if q is not None:
            c[q] -= vq
        if shift:
            const += vq * _rat(shift)

    # Slacks for the inequality block (everything after the first n_eq rows).
    n_rows = len(rows)
    n_slack = n_rows - n_eq
    for i in range(n_rows):
        rows[i] = rows[i] + [_ZERO] * n_slack
    for s, i in enumerate(range(n_eq, n_rows)):
        rows[i][cols + s] = _ONE
    c += [_ZERO] * n_slack

    # Drop exact duplicate rows.
    seen = {}
    keep = []
    for i in range(n_rows):
        key = (tuple(rows[i]), rhs[i])
        if key not in seen:
            seen[key] = i
            keep.append(i)
    rows = [rows[i] for i in keep]
    rhs = [rhs[i] for i in keep]

    return rows, rhs, c, const, sign, rep, cols, n_slack


def _extract_entering(z, allowed, bland):
    if bland:
        for j in allowed:
            if z[j] < 0:
                return j
        return None
    best, best_j = _ZERO, None
    for j in allowed:
        v = z[j]
        if v < best:
            best, best_j = v, j
    return best_j


def _ratio_leaving(T, b, basis, col):
    best_t = None
    best_i = None
    for i, row in enumerate(T):
        a = row[col]
        if a > 0:
            t = b[i] / a
            if best_t is None or t < best_t or (t == best_t and basis[i] < basis[best_i]):
                best_t, best_i = t, i
    return best_i


def _pivot(T, b, z, basis, r, c):
    prow = T[r]
    pv = prow[c]
    if pv != 1:
        inv = _ONE / pv
        prow = [v * inv for v in prow]
        T[r] = prow
        b[r] = b[r] * inv
    nz = [j for j, v in enumerate(prow) if v]
    br = b[r]
    for i, row in enumerate(T):
        if i == r:
            continue
        f = row[c]
        if f:
            for j in nz:
                row[j] -= f * prow[j]
            if br:
                b[i] -= f * br
    f = z[c]
    delta = f * br if f else _ZERO
    if f:
        for j in nz:
            z[j] -= f * prow[j]
    basis[r] = c
    return delta


def _run_simplex(T, b, z, basis, allowed, obj, stall_limit):
    """Pivot to optimality; returns (status, obj, iterations)."""
    bland = False
    stall = 0
    iters = 0
    while True:
        c = _extract_entering(z, allowed, bland)
        if c is None:
            return OPTIMAL, obj, iters
        r = _ratio_leaving(T, b, basis, c)
        if r is None:
            return UNBOUNDED, obj, iters
        obj += _pivot(T, b, z, basis, r, c)
        iters += 1
        if b[r] == 0:
            stall += 1
            if stall > stall_limit:
                bland = True
        else:
            stall = 0


def solve(lp: LinearProgram) -> LPSolution:
    """Exact optimum of the LP by two-phase simplex on rationals."""
    rows, rhs, c, const, sign, rep, n_struct, n_slack = _standardize(lp)
    m = len(rows)
    ncols = n_struct + n_slack

    # Normalize to b >= 0, then give every row a basic column: reuse a +1
    # slack where possible, otherwise add an artificial.  unit_col[i] is the
    # column that started as row i's identity vector; the final reduced cost
    # there reads off the dual multiplier of row i.
    T = []
    b = []
    row_sign = []
    for i in range(m):
        if rhs[i] < 0:
            T.append([-v for v in rows[i]])
            b.append(-rhs[i])
            row_sign.append(-1)
        else:
            T.append(list(rows[i]))
            b.append(rhs[i])
            row_sign.append(1)

    basis = [-1] * m
    art_cols = []
    unit_col = [-1] * m
    for i in range(m):
        pivot_col = None
        for j in range(n_struct, ncols):
            if T[i][j] == 1 and all(T[k][j] == 0 for k in range(m) if k != i):
                pivot_col = j
                break
        if pivot_col is None:
            for row_k in T:
                row_k.append(_ZERO)
            T[i][ncols] = _ONE
            art_cols.append(ncols)
            basis[i] = ncols
            unit_col[i] = ncols
            ncols += 1
        else:
            basis[i] = pivot_col
            unit_col[i] = pivot_col

    total_iters = 0
    if art_cols:
        z = [_ZERO] * ncols
        obj = _ZERO
        art_set = set(art_cols)
        for i in range(m):
            if basis[i] in art_set:
                row = T[i]
                for j in range(ncols):
                    if row[j] and j not in art_set:
                        z[j] -= row[j]
                obj += b[i]
        allowed = [j for j in range(ncols) if j not in art_set]
        status, obj, iters = _run_simplex(T, b, z, basis, allowed, obj, 4 * (m + ncols))
        total_iters += iters
        if obj != 0:
            return LPSolution(status=INFEASIBLE, iterations=total_iters)
        # Drive remaining artificials out of the basis; drop redundant rows
        # (their dual multiplier is then 0, which the unit-column readout
        # produces automatically since their column vanishes from kept rows).
        drop = []
        for i in range(m):
            if basis[i] in art_set:
                pivot_col = next(
                    (j for j in allowed if T[i][j] != 0),
                    None,
                )
                if pivot_col is None:
                    drop.append(i)
                else:
                    z_dummy = [_ZERO] * ncols
                    _pivot(T, b, z_dummy, basis, i, pivot_col)
        for i in reversed(drop):
            del T[i], b[i], basis[i]
        m = len(T)
    art_set = set(art_cols)

    # Phase II on the real costs; reduce costs of basic columns to zero.
    z = list(c) + [_ZERO] * (ncols - len(c))
    obj = _ZERO
    for i in range(m):
        f = z[basis[i]]
        if f:
            row = T[i]
            for j in range(ncols):
                if row[j]:
                    z[j] -= f * row[j]
            obj += f * b[i]
    allowed = [j for j in range(ncols) if j not in art_set]
    status, obj, iters = _run_simplex(T, b, z, basis, allowed, obj, 4 * (m + ncols))
    total_iters += iters
    if status == UNBOUNDED:
        return LPSolution(status=UNBOUNDED, iterations=total_iters)

    # Recover the standard-form point, then the original variables.
    x_std = [_ZERO] * ncols
    for i in range(m):
        x_std[basis[i]] = b[i]
    point = []
    for p, q, shift in rep:
        v = x_std[p] - (x_std[q] if q is not None else _ZERO) + _rat(shift)
        point.append(_to_fraction(v))
    value = _to_fraction(obj + const)
    if lp.sense == "max":
        value = -value
    # Duals of the standardized rows: row i started with identity column
    # unit_col[i] of cost 0, whose final reduced cost is -y_i (sign-adjusted
    # for rows negated during the b >= 0 normalization).
    dual = tuple(
        _to_fraction(-z[unit_col[i]]) * row_sign[i] for i in range(len(unit_col))
    )
    return LPSolution(
        status=OPTIMAL,
        value=value,
        point=tuple(point),
        basis=tuple(basis),
        dual=dual,
        iterations=total_iters,
    )


def solve_float(lp: LinearProgram, tol: float = 1e-9) -> LPSolution:
    """Float-mode solve via scipy's HiGHS for instances too large for exact
    arithmetic; the reported tolerance is attached to the solution."""
    from scipy.optimize import linprog

    c = [float(v) for v in lp.objective]
    if lp.sense == "max":
        c = [-v for v in c]
    lower = lp.lower if lp.lower is not None else [0] * lp.n_vars
    upper = lp.upper if lp.upper is not None else [None] * lp.n_vars
    bounds = [
        (None if lo is None else float(lo), None if up is None else float(up))
        for lo, up in zip(lower, upper)
    ]
    res = linprog(
        c,
        A_ub=[[float(v) for v in row] for row in lp.ub_rows] or None,
        b_ub=[float(v) for v in lp.ub_rhs] or None,
        A_eq=[[float(v) for v in row] for row in lp.eq_rows] or None,
        b_eq=[float(v) for v in lp.eq_rhs] or None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return LPSolution(status=INFEASIBLE, tolerance=tol)
    if res.status == 3:
        return LPSolution(status=UNBOUNDED, tolerance=tol)
    if not res.success:
        raise RuntimeError(f"float LP solve failed: {res.message}")
    value = -res.fun if lp.sense == "max" else res.fun
    return LPSolution(
        status=OPTIMAL,
        value=value,
        point=tuple(float(v) for v in res.x),
        iterations=int(res.nit),
        tolerance=tol,
    )


def verify_certificate(lp: LinearProgram, sol: LPSolution, check_dual: bool = True) -> bool:
    """Re-substitute the optimizer and check exact feasibility and value.

    With duals available, also checks dual feasibility and strong duality,
    which certifies optimality without trusting the pivot arithmetic.
    """
    if sol.status != OPTIMAL:
        return False
    x = [Fraction(v) for v in sol.point]
    lower = lp.lower if lp.lower is not None else [Fraction(0)] * lp.n_vars
    upper = lp.upper if lp.upper is not None else [None] * lp.n_vars
    for j in range(lp.n_vars):
        if lower[j] is not None and x[j] < lower[j]:
            return False
        if upper[j] is not None and x[j] > upper[j]:
            return False
    for row, bb in zip(lp.eq_rows, lp.eq_rhs):
        if sum(Fraction(v) * x[j] for j, v in enumerate(row) if v) != Fraction(bb):
            return False
    for row, bb in zip(lp.ub_rows, lp.ub_rhs):
        if sum(Fraction(v) * x[j] for j, v in enumerate(row) if v) > Fraction(bb):
            return False
    achieved = sum(Fraction(c) * x[j] for j, c in enumerate(lp.objective) if c)
    if achieved != sol.value:
        return False
    if check_dual and sol.dual is not None:
        rows, rhs, c, const, sign, rep, n_struct, n_slack = _standardize(lp)
        if len(sol.dual) != len(rows):
            return False
        y = [_rat(int(v.numerator)) / _rat(int(v.denominator)) for v in sol.dual]
        ncols = n_struct + n_slack
        for j in range(ncols):
            red = (c[j] if j < len(c) else _ZERO) - sum(
                y[i] * rows[i][j] for i in range(len(rows)) if rows[i][j]
            )
            if red < 0:
                return False
        strong = sum(y[i] * rhs[i] for i in range(len(rows)))
        val = _rat(int(sol.value.numerator)) / _rat(int(sol.value.denominator))
        std_val = (val if lp.sense == "min" else -val) - const
        if strong != std_val:
            return False
    return True


# ---------------------------------------------------------------------------
# No-signalling polytope constraints.


@dataclass
class NSConstraints:
    scenario: Scenario
    normalization_rows: list
    normalization_rhs: list
    ns_rows: list
    ns_rhs: list

    def all_rows(self):
        return self.normalization_rows + self.ns_rows, self.normalization_rhs + self.ns_rhs


def ns_constraints(scenario: Scenario) -> NSConstraints:
    """Equalities cutting out the NS polytope (with x >= 0 bounds).

    Normalization: one row per setting tuple.  No-signalling: for each party
    k, each setting tuple of the others, each outcome tuple of the others and
    each x_k > 0, the marginal with party k summed out equals its value at
    x_k = 0.  Redundancies are tolerated by the solver.
    """
    scn = scenario
    n = scn.size
    norm_rows, norm_rhs = [], []
    for x in scn.all_settings():
        row = [0] * n
        base = scn.column_index(x) * scn.column_size
        for i in range(scn.column_size):
            row[base + i] = 1
        norm_rows.append(row)
        norm_rhs.append(1)

    ns_rows, ns_rhs = [], []
    for k in range(scn.parties):
        others = [j for j in range(scn.parties) if j != k]
        for xo in itertools.product(range(scn.settings), repeat=len(others)):
            for xk in range(1, scn.settings):
                for ao in itertools.product(range(scn.outcomes), repeat=len(others)):
                    row = [0] * n
                    x = [0] * scn.parties
                    a = [0] * scn.parties
                    for j, v in zip(others, xo):
                        x[j] = v
                    for j, v in zip(others, ao):
                        a[j] = v
                    for ak in range(scn.outcomes):
                        a[k] = ak
                        x[k] = xk
                        row[scn.index(x, a)] += 1
                        x[k] = 0
                        row[scn.index(x, a)] -= 1
                    ns_rows.append(row)
                    ns_rhs.append(0)
    return NSConstraints(scn, norm_rows, norm_rhs, ns_rows, ns_rhs)


def optimize_over_ns(
    scenario: Scenario,
    objective: Sequence,
    sense: str = "min",
    extra_eq: Sequence[tuple] = (),
    extra_ub: Sequence[tuple] = (),
) -> LPSolution:
    """Optimize a linear functional of the behavior over the NS polytope,
    optionally intersected with extra equality/inequality constraints."""
    cons = ns_constraints(scenario)
    rows, rhs = cons.all_rows()
    for row, b in extra_eq:
        rows.append(list(row))
        rhs.append(b)
    ub_rows, ub_rhs = [], []
    for row, b in extra_ub:
        ub_rows.append(list(row))
        ub_rhs.append(b)
    lp = LinearProgram(
        n_vars=scenario.size,
        objective=list(objective),
        sense=sense,
        eq_rows=rows,
        eq_rhs=rhs,
        ub_rows=ub_rows,
        ub_rhs=ub_rhs,
    )
    return solve(lp)


def lp_to_json(lp: LinearProgram) -> dict:
    """Debug dump allowing any reported optimum to be reproduced."""
    return {
        "n_vars": lp.n_vars,
        "sense": lp.sense,
        "objective": [format_number(Fraction(v)) for v in lp.objective],
        "eq_rows": [[format_number(Fraction(v)) for v in row] for row in lp.eq_rows],
        "eq_rhs": [format_number(Fraction(v)) for v in lp.eq_rhs],
        "ub_rows": [[format_number(Fraction(v)) for v in row] for row in lp.ub_rows],
        "ub_rhs": [format_number(Fraction(v)) for v in lp.ub_rhs],
    }
