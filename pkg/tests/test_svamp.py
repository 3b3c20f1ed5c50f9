import math
import random
from fractions import Fraction

import pytest

from monogamy_lab.bell import chained_bkp, evaluate
from monogamy_lab.sampling import ns_pool
from monogamy_lab.scenario import Behavior, Scenario
from monogamy_lab.svamp import (
    AdversaryModel,
    SVSource,
    bell_functional_for,
    bell_settings,
    critical_epsilon,
    critical_epsilon_common,
    curve_to_csv,
    feasibility_curve,
    model_from_json,
    model_to_json,
    observed_behavior,
    q_factor,
    q_factor_tilde,
    random_adversary_model,
    random_sv_input_dist,
    source_uses,
    variational_bound,
)


@pytest.fixture(scope="module")
def pool_222():
    return ns_pool(Scenario(2, 2, 2), random.Random(1), n_vertices=10, n_lp=2)


def uniform_inputs(scn):
    p = Fraction(1, scn.n_columns)
    return {x: p for x in scn.all_settings()}


def test_sv_source_validation():
    s = SVSource(Fraction(1, 10))
    assert s.low == Fraction(2, 5) and s.high == Fraction(3, 5)
    assert s.contains(Fraction(1, 2))
    assert not s.contains(Fraction(7, 10))
    with pytest.raises(ValueError):
        SVSource(Fraction(1, 2))
    assert s.likelihood_ratio_bound(2) == Fraction(9, 4)


def test_source_uses():
    assert source_uses(2) == 1
    assert source_uses(3) == 2
    assert source_uses(4) == 2
    assert source_uses(5) == 3


def test_single_strategy_observed_identity(pool_222):
    scn = Scenario(2, 2, 2)
    model = AdversaryModel(scn, [pool_222[0]], [uniform_inputs(scn)], [Fraction(1)])
    assert observed_behavior(model).probs == pool_222[0].probs


def test_two_strategies_unbiased_mixture(pool_222):
    scn = Scenario(2, 2, 2)
    b1, b2 = pool_222[1], pool_222[2]
    model = AdversaryModel(
        scn,
        [b1, b2],
        [uniform_inputs(scn), uniform_inputs(scn)],
        [Fraction(1, 3), Fraction(2, 3)],
    )
    obs = observed_behavior(model)
    expected = tuple(
        Fraction(1, 3) * p + Fraction(2, 3) * q for p, q in zip(b1.probs, b2.probs)
    )
    assert obs.probs == expected


def test_adversary_model_validation(pool_222):
    scn = Scenario(2, 2, 2)
    with pytest.raises(ValueError):
        AdversaryModel(scn, [pool_222[0]], [uniform_inputs(scn)], [Fraction(1, 2)])
    # signalling strategy rejected
    probs = [Fraction(0)] * scn.size
    for x in scn.all_settings():
        for a in scn.all_outcomes():
            if a[0] == x[1]:
                probs[scn.index(x, a)] = Fraction(1, 2)
    with pytest.raises(ValueError):
        AdversaryModel(scn, [Behavior(scn, tuple(probs))], [uniform_inputs(scn)], [Fraction(1)])


def test_zero_probability_bell_setting_rejected(pool_222):
    scn = Scenario(2, 2, 2)
    dist = {x: Fraction(0) for x in scn.all_settings()}
    dist[(0, 0)] = Fraction(1)
    model = AdversaryModel(scn, [pool_222[0]], [dist], [Fraction(1)])
    with pytest.raises(ValueError):
        observed_behavior(model)


def test_observed_bell_value_decomposition(pool_222):
    # with all p(x) equal: I(observed) = sum_w p(w)/p(x) I_w
    scn = Scenario(2, 2, 2)
    f = chained_bkp(2, 2)
    b1, b2, b3 = pool_222[0], pool_222[3], pool_222[4]
    prior = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
    model = AdversaryModel(
        scn, [b1, b2, b3], [uniform_inputs(scn)] * 3, prior
    )
    obs = observed_behavior(model)
    lhs = evaluate(f, obs)
    rhs = sum(p * evaluate(f, b) for p, b in zip(prior, [b1, b2, b3]))
    assert lhs == rhs


def test_q_factor_unbiased_is_one(pool_222):
    scn = Scenario(2, 2, 2)
    model = AdversaryModel(
        scn,
        [pool_222[0], pool_222[1]],
        [uniform_inputs(scn)] * 2,
        [Fraction(1, 4), Fraction(3, 4)],
    )
    for x in scn.all_settings():
        assert q_factor(model, x) == 1
        assert q_factor_tilde(model, x) == 1


def test_q_factors_agree_with_equal_input_marginals(pool_222):
    # Q and the tilde variant coincide whenever all p(x) are equal
    scn = Scenario(2, 2, 2)
    rng = random.Random(5)
    eps = Fraction(1, 8)
    dist_a = random_sv_input_dist(scn, rng, eps)
    # complementary strategy keeps p(x) exactly uniform under a (1/2, 1/2) prior
    dist_b = {x: Fraction(1, 2) - dist_a[x] for x in scn.all_settings()}
    assert all(p >= 0 for p in dist_b.values())
    model = AdversaryModel(
        scn,
        [pool_222[0], pool_222[1]],
        [dist_a, dist_b],
        [Fraction(1, 2), Fraction(1, 2)],
    )
    px = {x: model.input_probability(x) for x in scn.all_settings()}
    assert len(set(px.values())) == 1
    for x in bell_settings(scn):
        assert q_factor(model, x) == q_factor_tilde(model, x)


def test_q_tilde_sv_bound(pool_222):
    # product SV-box inputs obey Q~ <= ((1+2e)/(1-2e))^(N r)
    scn = Scenario(2, 3, 2)
    rng = random.Random(9)
    pool = ns_pool(scn, rng, n_vertices=8, n_lp=1)
    eps = Fraction(1, 10)
    bound = SVSource(eps).likelihood_ratio_bound(2 * source_uses(3))
    for _ in range(10):
        model = random_adversary_model(scn, rng, pool, n_strategies=3, epsilon=eps)
        for x in bell_settings(scn):
            q = q_factor_tilde(model, x)
            assert q is not None and q <= bound


def test_variational_max_violation_strategy():
    # single strategy at the NS minimum: outcomes unbiased, lhs = rhs = 0
    scn = Scenario(2, 2, 2)
    from monogamy_lab.polylp import optimize_over_ns

    mini = optimize_over_ns(scn, chained_bkp(2, 2).dense(), "min").behavior(scn)
    model = AdversaryModel(scn, [mini], [uniform_inputs(scn)], [Fraction(1)])
    chk = variational_bound(model, (0, 0), 0)
    assert chk.lhs == 0 and chk.rhs == 0 and chk.satisfied


def test_variational_deterministic_strategy():
    # deterministic local strategy, d = 2: lhs = 1 <= rhs = I >= 1
    scn = Scenario(2, 2, 2)
    from monogamy_lab.scenario import deterministic_vertex

    v = deterministic_vertex(scn, [(0, 0), (0, 0)])
    model = AdversaryModel(scn, [v], [uniform_inputs(scn)], [Fraction(1)])
    chk = variational_bound(model, (0, 0), 0)
    assert chk.lhs == 1
    assert chk.rhs >= 1
    assert chk.satisfied
    assert chk.distance == Fraction(1, 2)


def test_variational_bound_montecarlo(pool_222):
    scn = Scenario(2, 2, 2)
    rng = random.Random(13)
    for _ in range(40):
        model = random_adversary_model(
            scn, rng, pool_222,
            n_strategies=rng.randrange(1, 6),
            epsilon=Fraction(rng.randrange(0, 12), 100),
        )
        obs = observed_behavior(model)
        bv = evaluate(bell_functional_for(scn), obs)
        for x in scn.all_settings():
            for k in range(2):
                chk = variational_bound(model, x, k, observed=obs, bell_value=bv)
                assert chk.satisfied


def test_critical_epsilons():
    assert abs(critical_epsilon(2) - (math.sqrt(2) - 1) ** 2 / 2) < 1e-15
    assert critical_epsilon_common(2) == Fraction(1, 6)
    values = [critical_epsilon(n) for n in range(2, 9)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert critical_epsilon(40) < 0.005
    with pytest.raises(ValueError):
        critical_epsilon(1)


def test_feasibility_curve_below_threshold_decreases():
    rows = feasibility_curve(
        2, 2, Fraction(1, 20), [2, 4, 8, 16], lam=1.2, variant="per-party"
    )
    bounds = [r.rhs_bound for r in rows]
    assert all(a > b for a, b in zip(bounds, bounds[1:]))


def test_feasibility_curve_between_thresholds():
    # eps above the per-party threshold but below the common-source one
    eps = Fraction(12, 100)
    per = feasibility_curve(2, 2, eps, [2, 4, 8, 16, 32], lam=1.2, variant="per-party")
    common = feasibility_curve(2, 2, eps, [2, 4, 8, 16, 32], lam=1.2, variant="common-source")
    per_bounds = [r.rhs_bound for r in per]
    common_bounds = [r.rhs_bound for r in common]
    assert per_bounds[-1] > per_bounds[1]  # diverges at doubling steps
    assert all(a > b for a, b in zip(common_bounds, common_bounds[1:]))


def test_feasibility_threshold_independent_of_d():
    for n in (2, 3):
        assert critical_epsilon(n) == critical_epsilon(n)  # d never enters
    rows2 = feasibility_curve(2, 2, Fraction(1, 20), [2, 4], lam=1.0)
    rows3 = feasibility_curve(2, 3, Fraction(1, 20), [2, 4], lam=1.0)
    assert [r.exponent for r in rows2] == [r.exponent for r in rows3]


def test_curve_csv_format():
    rows = feasibility_curve(2, 2, Fraction(1, 20), [2, 4], lam=1.2)
    text = curve_to_csv(2, 2, Fraction(1, 20), rows)
    lines = text.strip().splitlines()
    assert lines[0] == "N,d,epsilon,M,r,exponent,I_Q,rhs_bound,variant"
    assert len(lines) == 3


def test_model_json_roundtrip(pool_222):
    scn = Scenario(2, 2, 2)
    rng = random.Random(21)
    model = random_adversary_model(scn, rng, pool_222, n_strategies=2)
    back = model_from_json(model_to_json(model), exact=True)
    assert back.prior == model.prior
    assert back.behaviors[0].probs == model.behaviors[0].probs
    assert back.input_dists == model.input_dists
