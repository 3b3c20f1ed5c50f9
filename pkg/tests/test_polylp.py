import json
from fractions import Fraction

import pytest

from monogamy_lab.bell import chained_bkp, classical_minimum, evaluate, recursive_bkp
from monogamy_lab.polylp import (
    INFEASIBLE,
    LinearProgram,
    OPTIMAL,
    UNBOUNDED,
    lp_to_json,
    ns_constraints,
    optimize_over_ns,
    solve,
    verify_certificate,
)
from monogamy_lab.scenario import (
    Scenario,
    is_nonsignalling,
    uniform_behavior,
    validate,
)


def test_box_maximum():
    lp = LinearProgram(1, [1], "max", upper=[Fraction(1)])
    sol = solve(lp)
    assert sol.status == OPTIMAL and sol.value == 1
    assert verify_certificate(lp, sol)


def test_infeasible_detected():
    lp = LinearProgram(1, [1], "min", eq_rows=[[1]], eq_rhs=[2], upper=[Fraction(1)])
    assert solve(lp).status == INFEASIBLE


def test_unbounded_detected():
    lp = LinearProgram(1, [-1], "min")
    assert solve(lp).status == UNBOUNDED


def test_free_variable_handling():
    # min x with x free and x >= -3 via constraint: optimum -3
    lp = LinearProgram(
        1, [1], "min", ub_rows=[[-1]], ub_rhs=[3], lower=[None]
    )
    sol = solve(lp)
    assert sol.status == OPTIMAL and sol.value == -3
    assert verify_certificate(lp, sol)


def test_shifted_lower_bounds():
    lp = LinearProgram(2, [1, 2], "min", lower=[Fraction(-1), Fraction(2)])
    sol = solve(lp)
    assert sol.value == -1 + 4
    assert sol.point == (Fraction(-1), Fraction(2))


def test_degenerate_redundant_rows():
    # duplicated and linearly dependent equalities must not break anything
    lp = LinearProgram(
        2,
        [1, 1],
        "min",
        eq_rows=[[1, 1], [1, 1], [2, 2]],
        eq_rhs=[1, 1, 2],
    )
    sol = solve(lp)
    assert sol.status == OPTIMAL and sol.value == 1
    assert verify_certificate(lp, sol)


def test_ns_constraint_counts():
    cons = ns_constraints(Scenario(2, 2, 2))
    assert len(cons.normalization_rows) == 4
    assert len(cons.ns_rows) == 8
    cons = ns_constraints(Scenario(2, 3, 2))
    assert len(cons.normalization_rows) == 9
    assert len(cons.ns_rows) == 2 * 2 * 3 * 2  # (M-1) M d per party


def _satisfies(rows, rhs, probs):
    return all(
        sum(c * p for c, p in zip(row, probs)) == b for row, b in zip(rows, rhs)
    )


def test_uniform_satisfies_ns_constraints():
    scn = Scenario(2, 2, 2)
    cons = ns_constraints(scn)
    rows, rhs = cons.all_rows()
    assert _satisfies(rows, rhs, uniform_behavior(scn).probs)


def test_signalling_point_violates_ns_equality():
    scn = Scenario(2, 2, 2)
    probs = [Fraction(0)] * scn.size
    for x in scn.all_settings():
        for a in scn.all_outcomes():
            if a[0] == x[1]:
                probs[scn.index(x, a)] = Fraction(1, 2)
    cons = ns_constraints(scn)
    assert _satisfies(cons.normalization_rows, cons.normalization_rhs, probs)
    assert not _satisfies(cons.ns_rows, cons.ns_rhs, probs)


@pytest.mark.parametrize("M,d", [(2, 2), (3, 2), (2, 3), (3, 3)])
def test_ns_minimum_of_chained_is_zero(M, d):
    scn = Scenario(2, M, d)
    f = chained_bkp(M, d)
    sol = optimize_over_ns(scn, f.dense(), "min")
    assert sol.status == OPTIMAL
    assert sol.value == 0
    opt = sol.behavior(scn)
    assert validate(opt, 0) == []
    assert is_nonsignalling(opt, 0)[0]
    assert evaluate(f, opt) == 0


def test_ns_minimizer_is_nonlocal_box():
    # at I = 0 every outcome pair must be uniform on each term's settings
    scn = Scenario(2, 2, 2)
    sol = optimize_over_ns(scn, chained_bkp(2, 2).dense(), "min")
    opt = sol.behavior(scn)
    for x in scn.all_settings():
        col = opt.column(x)
        assert sum(col) == 1
        assert max(col) == Fraction(1, 2)


def test_agreement_max_under_zero_violation():
    # max p(A_0 = C_0) subject to I_AB = 0 on (3,2,2) is exactly 1/2
    from monogamy_lab.monogamy import agreement_vector, embedded_bkp

    scn = Scenario(3, 2, 2)
    obj = agreement_vector(scn, 0, 0, 0)
    i_vec = list(embedded_bkp(scn).dense())
    sol = optimize_over_ns(scn, obj, "max", extra_eq=[(i_vec, Fraction(0))])
    assert sol.status == OPTIMAL and sol.value == Fraction(1, 2)


def test_ns_min_below_local_min():
    for N, M, d in [(2, 2, 2), (2, 2, 3), (3, 2, 2)]:
        f = recursive_bkp(N, M, d)
        sol = optimize_over_ns(Scenario(N, M, d), f.dense(), "min")
        assert sol.value <= classical_minimum(f)


def test_certificates_on_ns_optimum():
    scn = Scenario(2, 2, 3)
    f = chained_bkp(2, 3)
    cons = ns_constraints(scn)
    rows, rhs = cons.all_rows()
    lp = LinearProgram(scn.size, list(f.dense()), "min", eq_rows=rows, eq_rhs=rhs)
    sol = solve(lp)
    assert sol.status == OPTIMAL
    assert sol.dual is not None
    assert verify_certificate(lp, sol)


def test_certificate_rejects_tampered_value():
    lp = LinearProgram(2, [1, 1], "min", eq_rows=[[1, 1]], eq_rhs=[1])
    sol = solve(lp)
    sol.value = Fraction(2)
    assert not verify_certificate(lp, sol)


def test_float_mode_agrees_with_exact_on_random_lps():
    import random as _random

    from monogamy_lab.polylp import solve_float

    rng = _random.Random(17)
    for _ in range(25):
        n = rng.randrange(2, 6)
        lp = LinearProgram(
            n,
            [Fraction(rng.randrange(-5, 6)) for _ in range(n)],
            "min",
            eq_rows=[[Fraction(rng.randrange(0, 3)) for _ in range(n)] for _ in range(1)],
            eq_rhs=[Fraction(rng.randrange(1, 4))],
            ub_rows=[[Fraction(rng.randrange(-2, 3)) for _ in range(n)] for _ in range(2)],
            ub_rhs=[Fraction(rng.randrange(1, 5)) for _ in range(2)],
            upper=[Fraction(3)] * n,
        )
        exact = solve(lp)
        approx = solve_float(lp)
        assert exact.status == approx.status
        if exact.status == OPTIMAL:
            assert abs(float(exact.value) - approx.value) < 1e-7
            assert approx.tolerance is not None


def test_lp_json_dump_roundtrips():
    lp = LinearProgram(
        2, [Fraction(1, 3), 1], "min", eq_rows=[[1, 1]], eq_rhs=[1]
    )
    obj = json.loads(json.dumps(lp_to_json(lp)))
    assert obj["n_vars"] == 2
    assert obj["objective"] == ["1/3", "1"]
    assert obj["eq_rhs"] == ["1"]
