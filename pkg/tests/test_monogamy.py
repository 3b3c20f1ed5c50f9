import random
from fractions import Fraction

import pytest

from monogamy_lab.bell import chained_bkp, evaluate
from monogamy_lab.errors import SignallingInputError
from monogamy_lab.monogamy import (
    agreement_probability,
    guessing_bound,
    guessing_bound_prior,
    minimize_lhs_over_ns,
    monogamy_lhs_general,
    monogamy_lhs_tripartite,
    monogamy_report,
    report_to_csv,
    scan_to_csv,
    tightness_scan,
)
from monogamy_lab.polylp import optimize_over_ns
from monogamy_lab.sampling import (
    ns_pool,
    project_to_ns,
    random_behavior,
    random_ns_mixture,
)
from monogamy_lab.scenario import (
    Behavior,
    Scenario,
    deterministic_vertex,
    product,
    uniform_behavior,
)


@pytest.fixture(scope="module")
def minimizer_222():
    scn = Scenario(2, 2, 2)
    sol = optimize_over_ns(scn, chained_bkp(2, 2).dense(), "min")
    return sol.behavior(scn)


def test_saturation_by_product_construction():
    # all-zero two-party vertex (I = 1) times a deterministic third party
    ab = deterministic_vertex(Scenario(2, 2, 2), [(0, 0), (0, 0)])
    c = deterministic_vertex(Scenario(1, 2, 2), [(0, 0)])
    b = product(ab, c)
    for x_party in (0, 1):
        for i in range(2):
            for j in range(2):
                assert monogamy_lhs_tripartite(b, x_party, i, j) >= 1
    assert monogamy_lhs_tripartite(b, 0, 0, 0) == 1  # saturated


def test_max_violation_forces_uncorrelated_outsider(minimizer_222):
    b = product(minimizer_222, uniform_behavior(Scenario(1, 2, 2)))
    assert monogamy_lhs_tripartite(b, 0, 0, 0) == 1
    p, ok = agreement_probability(b, 0, 0, 0)
    assert p == Fraction(1, 2) and ok


def test_agreement_shift_partition(minimizer_222):
    b = product(minimizer_222, uniform_behavior(Scenario(1, 2, 2)))
    total = sum(agreement_probability(b, 0, 0, 0, m)[0] for m in range(2))
    assert total == 1


def test_perfect_correlation_forces_no_violation():
    # outsider copying a party's outcome caps the Bell value from below
    scn = Scenario(3, 2, 2)
    rng = random.Random(11)
    pool = ns_pool(scn, rng, n_vertices=12, n_lp=1)
    for _ in range(20):
        b = random_ns_mixture(pool, rng)
        p, _ = agreement_probability(b, 0, 0, 0)
        if p == 1:
            from monogamy_lab.scenario import restrict

            value = evaluate(chained_bkp(2, 2), restrict(b, range(2)))
            assert value >= 1


def test_signalling_inputs_rejected():
    scn = Scenario(3, 2, 2)
    probs = [Fraction(0)] * scn.size
    for x in scn.all_settings():
        for a in scn.all_outcomes():
            if a[0] == x[1]:
                probs[scn.index(x, a)] = Fraction(1, 4)
    b = Behavior(scn, tuple(probs))
    with pytest.raises(SignallingInputError):
        monogamy_lhs_tripartite(b, 0, 0, 0)


def test_equivalence_of_bell_and_agreement_forms():
    # LHS - (d-1) == (I+1) - d p(equal), via the modular-mean identity
    scn = Scenario(3, 2, 2)
    rng = random.Random(2)
    pool = ns_pool(scn, rng, n_vertices=10, n_lp=1)
    from monogamy_lab.scenario import restrict

    d = 2
    for _ in range(25):
        b = random_ns_mixture(pool, rng)
        i_val = evaluate(chained_bkp(2, 2), restrict(b, range(2)))
        for k in (0, 1):
            lhs = monogamy_lhs_general(b, k, 1, 0, check=False)
            p, _ = agreement_probability(b, k, 1, 0, check=False)
            assert lhs - (d - 1) == (i_val + 1) - d * p


def test_random_ns_points_satisfy_tripartite_monogamy():
    scn = Scenario(3, 2, 2)
    rng = random.Random(4)
    pool = ns_pool(scn, rng, n_vertices=16, n_lp=2)
    for _ in range(100):
        b = random_ns_mixture(pool, rng)
        for k in (0, 1):
            assert monogamy_lhs_general(b, k, rng.randrange(2), rng.randrange(2), check=False) >= 1


def test_projected_random_points_satisfy_monogamy():
    scn = Scenario(3, 2, 2)
    rng = random.Random(8)
    for _ in range(5):
        b = project_to_ns(random_behavior(scn, rng))
        from monogamy_lab.scenario import is_nonsignalling, validate

        assert validate(b, 0) == []
        assert is_nonsignalling(b, 0)[0]
        assert monogamy_lhs_tripartite(b, 0, 0, 0, check=False) >= 1


def test_guessing_bound_values():
    assert guessing_bound(Fraction(0), 2) == Fraction(1, 2)
    assert guessing_bound(Fraction(0), 3) == Fraction(1, 3)
    assert guessing_bound(Fraction(1), 2) == 1
    assert guessing_bound(Fraction(1, 2), 3) == Fraction(1, 2)
    assert guessing_bound(Fraction(5), 2) == 1  # clamped
    with pytest.raises(ValueError):
        guessing_bound(Fraction(-1), 2)


def test_guessing_bound_prior_values():
    assert guessing_bound_prior(Fraction(0), 2, 2, 2) == Fraction(1, 2)
    assert guessing_bound_prior(Fraction(1, 2), 2, 2, 2) == Fraction(3, 4)
    # crossing at 4 (d-1)/d^2 for N = 2
    for d in (2, 3, 4, 5, 6):
        crossing = Fraction(4 * (d - 1), d * d)
        assert guessing_bound_prior(crossing, 2, 2, d) == 1
        assert guessing_bound_prior(crossing * Fraction(99, 100), 2, 2, d) < 1


def test_tight_bound_dominates_prior():
    # (1+I)/d <= (1 + d^N (N-1) I/4)/d, strict for I > 0 unless d^N (N-1) = 4
    grid = [Fraction(i, 8) for i in range(9)]
    for d in (2, 3, 4):
        for n in (2, 3):
            for t in grid:
                i_val = t * (d - 1)
                tight = guessing_bound(i_val, d)
                prior = guessing_bound_prior(i_val, n, 2, d)
                assert tight <= prior
                if i_val > 0 and d**n * (n - 1) > 4 and prior < 1:
                    assert tight < prior
    # the d = 2, N = 2 curves coincide identically
    assert guessing_bound(Fraction(1, 3), 2) == guessing_bound_prior(Fraction(1, 3), 2, 2, 2)


@pytest.mark.parametrize("d", [2, 3])
def test_tightness_scan_is_exact(d):
    scn = Scenario(3, 2, d)
    rows = tightness_scan(scn, 0, 0, 0)
    assert len(rows) == 5
    for row in rows:
        assert row.status == "optimal"
        assert row.lp_max == row.bound == (1 + row.target) / d
        assert row.tight


def test_tightness_scan_flags_out_of_range_targets():
    scn = Scenario(3, 2, 2)
    rows = tightness_scan(scn, 0, 0, 0, grid=[Fraction(3, 2), Fraction(-1, 2)])
    assert all(r.status == "out-of-range" and not r.tight for r in rows)


def test_four_party_lhs_minimum():
    sol = minimize_lhs_over_ns(Scenario(4, 2, 2), 0, 0, 0)
    assert sol.status == "optimal"
    assert sol.value == 1


def test_report_and_csv(minimizer_222):
    b = product(minimizer_222, uniform_behavior(Scenario(1, 2, 2)))
    records = monogamy_report(b)
    assert len(records) == 2 * 2 * 2 * 2  # k, x_k, x_last, m
    assert all(r.satisfied for r in records)
    csv_text = report_to_csv(records)
    assert csv_text.splitlines()[0] == "k,x_k,x_last,m,t,lhs,bound,slack"

    rows = tightness_scan(Scenario(3, 2, 2), 0, 0, 0, grid=[Fraction(0)])
    text = scan_to_csv(rows, 0, 0, 0)
    assert "1/2" in text
