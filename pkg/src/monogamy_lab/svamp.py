"""Partially free sources and randomness amplification.

An epsilon-source emits bits whose conditional probabilities, given any
prior cause w, stay within [1/2 - eps, 1/2 + eps].  An adversary holding
the variable W steers both the sources (input-setting probabilities
p(x|w)) and the devices (a nonsignalling behavior per w).  The parties see
p(a|x) = sum_w p(w|x) p(a|x,w), and the variational distance between any
single party's outcome-and-W distribution and an ideal uniform-dit one is
capped by the observed Bell value:

    sum_{a_k, w} |p(a_k, w|x) - p(w|x)/d|  <=  ((d-1)^2 + 1)/d * Q(x) * I

with the bias factor Q(x) = max_w p(w|x)/min_x' p(w|x') (minimum over the
settings occurring in the functional).  A second variant uses
p(x|w)/min_x' p(x'|w); both coincide when all p(x) are equal.

With each party drawing r = ceil(log2 M) source bits per setting the factor
is at most ((1+2eps)/(1-2eps))^(N r), and since quantum strategies reach
I ~ 1/M, the cap vanishes as M grows iff eps < (2^(1/N)-1)/(2(2^(1/N)+1)).
A common source for all parties needs only 1 + (N-1) r bits, nearly
doubling the tolerable bias for N = 2 (to 1/6).
"""

from __future__ import annotations

import csv
import io
import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .bell import chained_bkp, evaluate, recursive_bkp
from .scenario import (
    Behavior,
    Scenario,
    format_number,
    is_nonsignalling,
    marginal,
    parse_number,
)


@dataclass(frozen=True)
class SVSource:
    """epsilon-source: n bits, each within eps of unbiased given all causes."""

    epsilon: Fraction
    n_bits: int = 1

    def __post_init__(self) -> None:
        if not 0 <= self.epsilon < Fraction(1, 2):
            raise ValueError("epsilon must lie in [0, 1/2)")
        if self.n_bits < 1:
            raise ValueError("need at least one bit")

    @property
    def low(self) -> Fraction:
        return Fraction(1, 2) - self.epsilon

    @property
    def high(self) -> Fraction:
        return Fraction(1, 2) + self.epsilon

    def contains(self, bit_prob) -> bool:
        return self.low <= bit_prob <= self.high

    def likelihood_ratio_bound(self, uses: int):
        """((1+2eps)/(1-2eps))^uses, the worst-case probability ratio of
        any two length-`uses` outputs."""
        return ((1 + 2 * self.epsilon) / (1 - 2 * self.epsilon)) ** uses


@dataclass
class AdversaryModel:
    """w-indexed strategies: NS behavior and input distribution per w, plus
    a prior; the scenario is shared."""

    scenario: Scenario
    behaviors: list[Behavior]
    input_dists: list[dict]  # per w: {setting tuple: probability}
    prior: list

    def __post_init__(self) -> None:
        n = len(self.behaviors)
        if not (n == len(self.input_dists) == len(self.prior)):
            raise ValueError("need one behavior, input distribution and prior entry per w")
        if sum(self.prior) != 1 or any(p < 0 for p in self.prior):
            raise ValueError("prior must be a distribution")
        for b in self.behaviors:
            if b.scenario != self.scenario:
                raise ValueError("behavior scenario mismatch")
            ok, worst = is_nonsignalling(b, 0 if b.is_exact else 1e-9)
            if not ok:
                raise ValueError(f"strategy behavior is signalling (deviation {worst})")
        for dist in self.input_dists:
            total = sum(dist.values())
            if total != 1 or any(p < 0 for p in dist.values()):
                raise ValueError("input distribution must be normalized and nonnegative")

    @property
    def n_strategies(self) -> int:
        return len(self.behaviors)

    def input_probability(self, x: tuple) -> object:
        """p(x) = sum_w p(w) p(x|w)."""
        return sum(
            pw * dist.get(x, 0) for pw, dist in zip(self.prior, self.input_dists)
        )

    def posterior(self, x: tuple) -> list:
        """p(w|x) by Bayes; requires p(x) > 0."""
        px = self.input_probability(x)
        if px == 0:
            raise ValueError(f"setting {x} has zero probability")
        return [
            pw * dist.get(x, 0) / px for pw, dist in zip(self.prior, self.input_dists)
        ]


def bell_functional_for(scenario: Scenario):
    if scenario.parties == 2:
        return chained_bkp(scenario.settings, scenario.outcomes)
    return recursive_bkp(scenario.parties, scenario.settings, scenario.outcomes)


def bell_settings(scenario: Scenario) -> list[tuple]:
    """Setting tuples that occur in the chained functional."""
    return bell_functional_for(scenario).settings_in_terms()


def observed_behavior(model: AdversaryModel) -> Behavior:
    """p(a|x) = sum_w p(w|x) p(a|x,w); typically signalling even though each
    strategy is nonsignalling, because the posterior depends on x.

    Every setting occurring in the functional must have p(x) > 0; other
    settings with p(x) = 0 fall back to the prior (they never affect the
    Bell value).
    """
    scn = model.scenario
    for x in bell_settings(scn):
        if model.input_probability(x) == 0:
            raise ValueError(f"setting {x} appears in the functional but has p(x)=0")
    probs = [0] * scn.size
    for x in scn.all_settings():
        try:
            post = model.posterior(x)
        except ValueError:
            post = list(model.prior)
        base = scn.column_index(x) * scn.column_size
        for w, b in enumerate(model.behaviors):
            pw = post[w]
            if pw == 0:
                continue
            col = b.column(x)
            for i, p in enumerate(col):
                probs[base + i] += pw * p
    return Behavior(scn, tuple(probs))


def q_factor(model: AdversaryModel, x: tuple):
    """Q(x) = max_w p(w|x)/p_min(w), p_min over the functional's settings.

    Returns None when some p_min(w) = 0 (unbounded).
    """
    settings = bell_settings(model.scenario)
    post_x = model.posterior(tuple(x))
    posts = [model.posterior(s) for s in settings]
    best = None
    for w in range(model.n_strategies):
        p_min = min(p[w] for p in posts)
        if p_min == 0:
            if post_x[w] > 0:
                return None
            continue
        ratio = post_x[w] / p_min
        best = ratio if best is None or ratio > best else best
    return best


def q_factor_tilde(model: AdversaryModel, x: tuple):
    """Variant with input likelihoods: max_w p(x|w)/min_x' p(x'|w)."""
    settings = bell_settings(model.scenario)
    x = tuple(x)
    best = None
    for dist in model.input_dists:
        p_min = min(dist.get(s, 0) for s in settings)
        px = dist.get(x, 0)
        if p_min == 0:
            if px > 0:
                return None
            continue
        ratio = px / p_min
        best = ratio if best is None or ratio > best else best
    return best


@dataclass
class VariationalCheck:
    x: tuple
    party: int
    lhs: object            # sum_{a_k,w} |p(a_k,w|x) - p(w|x)/d|
    rhs: object             # ((d-1)^2+1)/d * Q(x) * I(observed)
    distance: object        # the same lhs with the 1/2 normalization
    q: object
    bell_value: object
    satisfied: bool


def variational_bound(
    model: AdversaryModel,
    x: tuple,
    party: int,
    observed: Behavior | None = None,
    bell_value=None,
) -> VariationalCheck:
    """Check the outcome-vs-W variational bound for one setting and party."""
    scn = model.scenario
    d = scn.outcomes
    x = tuple(x)
    if not 0 <= party < scn.parties:
        raise ValueError("party out of range")
    if observed is None:
        observed = observed_behavior(model)
    if bell_value is None:
        bell_value = evaluate(bell_functional_for(scn), observed)
    post = model.posterior(x)
    lhs = 0
    for w, b in enumerate(model.behaviors):
        pw = post[w]
        outcome_dist = marginal(b, [party], [x[party]])
        for a in range(d):
            diff = pw * outcome_dist[a] - pw * Fraction(1, d)
            lhs += diff if diff >= 0 else -diff
    q = q_factor(model, x)
    if q is None:
        rhs = None
        satisfied = True  # unbounded factor: the bound is vacuous
    else:
        rhs = Fraction((d - 1) ** 2 + 1, d) * q * bell_value
        exact = isinstance(lhs, (int, Fraction)) and isinstance(rhs, (int, Fraction))
        satisfied = lhs <= rhs if exact else lhs <= rhs + 1e-12
    return VariationalCheck(
        x=x,
        party=party,
        lhs=lhs,
        rhs=rhs,
        distance=lhs / 2,
        q=q,
        bell_value=bell_value,
        satisfied=satisfied,
    )


# ---------------------------------------------------------------------------
# Critical bias thresholds.


def critical_epsilon(N: int):
    """(2^(1/N) - 1)/(2 (2^(1/N) + 1)): largest tolerable source bias when
    every party draws its own settings.  Exact Fraction when 2^(1/N) is
    rational (N = 1), float otherwise."""
    if N < 2:
        raise ValueError("need N >= 2")
    root = 2.0 ** (1.0 / N)
    return (root - 1.0) / (2.0 * (root + 1.0))


def critical_epsilon_common(N: int):
    """Common-source variant with N replaced by N - 1; exactly 1/6 for N = 2."""
    if N < 2:
        raise ValueError("need N >= 2")
    if N == 2:
        return Fraction(1, 6)
    root = 2.0 ** (1.0 / (N - 1))
    return (root - 1.0) / (2.0 * (root + 1.0))


def source_uses(M: int) -> int:
    """Bits needed to pick one of M settings: ceil(log2 M)."""
    return max(1, (M - 1).bit_length())


@dataclass
class FeasibilityRow:
    M: int
    r: int
    exponent: int
    bias_factor: float
    violation: float
    rhs_bound: float
    variant: str


def feasibility_curve(
    N: int,
    d: int,
    epsilon,
    m_values: Sequence[int],
    violations: dict | None = None,
    lam: float | None = None,
    variant: str = "per-party",
) -> list[FeasibilityRow]:
    """Upper bounds ((d-1)^2+1)/d * ratio^exponent * I_Q(M, d) over a
    settings range; the sequence tends to zero iff the bias is below the
    matching threshold.

    violations maps M to a quantum value of the functional; alternatively a
    proxy lam gives I ~ lam/M.  variant picks the per-party exponent N r or
    the common-source exponent 1 + (N-1) r.
    """
    if not 0 <= epsilon < 0.5:
        raise ValueError("epsilon must lie in [0, 1/2)")
    if violations is None and lam is None:
        raise ValueError("need measured violations or a lam proxy")
    if variant not in ("per-party", "common-source"):
        raise ValueError("variant must be 'per-party' or 'common-source'")
    ratio = (1 + 2 * float(epsilon)) / (1 - 2 * float(epsilon))
    rows = []
    for m in m_values:
        r = source_uses(m)
        exponent = N * r if variant == "per-party" else 1 + (N - 1) * r
        i_q = violations[m] if violations is not None else lam / m
        factor = ratio**exponent
        rows.append(
            FeasibilityRow(
                M=m,
                r=r,
                exponent=exponent,
                bias_factor=factor,
                violation=float(i_q),
                rhs_bound=((d - 1) ** 2 + 1) / d * factor * float(i_q),
                variant=variant,
            )
        )
    return rows


def curve_to_csv(N: int, d: int, epsilon, rows: Sequence[FeasibilityRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["N", "d", "epsilon", "M", "r", "exponent", "I_Q", "rhs_bound", "variant"])
    for r in rows:
        writer.writerow(
            [N, d, repr(float(epsilon)), r.M, r.r, r.exponent, repr(r.violation), repr(r.rhs_bound), r.variant]
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Monte-Carlo adversary models (exact arithmetic).


def random_sv_input_dist(
    scenario: Scenario, rng: random.Random, epsilon: Fraction, denom: int = 32
) -> dict:
    """Product input distribution built from per-party source bits whose
    biases are sampled inside the epsilon box.

    For M not a power of two, out-of-range bit patterns are rejected and the
    source redrawn, i.e. the pattern probabilities renormalize over the M
    valid ones.  Within a fixed w the normalization cancels, so the
    likelihood-ratio bound ((1+2e)/(1-2e))^r per party survives rejection.
    """
    source = SVSource(Fraction(epsilon))
    r = source_uses(scenario.settings)
    party_dists = []
    for _ in range(scenario.parties):
        bit_probs = []
        for _ in range(r):
            span = source.high - source.low
            p = source.low + span * Fraction(rng.randrange(denom + 1), denom)
            bit_probs.append(p)
        raw = []
        for bits in itertools.product((0, 1), repeat=r):
            setting = int("".join(map(str, bits)), 2)
            if setting >= scenario.settings:
                continue
            p = Fraction(1)
            for b, pb in zip(bits, bit_probs):
                p *= pb if b else 1 - pb
            raw.append((setting, p))
        total = sum(p for _, p in raw)
        dist = [Fraction(0)] * scenario.settings
        for setting, p in raw:
            dist[setting] += p / total
        party_dists.append(dist)
    joint = {}
    for x in scenario.all_settings():
        p = Fraction(1)
        for k, xk in enumerate(x):
            p *= party_dists[k][xk]
        joint[x] = p
    return joint


def random_adversary_model(
    scenario: Scenario,
    rng: random.Random,
    pool: Sequence[Behavior],
    n_strategies: int = 4,
    epsilon: Fraction = Fraction(1, 10),
) -> AdversaryModel:
    """Strategies are random mixtures over an NS pool; inputs are SV-box
    product distributions; the prior is a random rational distribution."""
    from .sampling import random_ns_mixture, random_weights

    behaviors = [random_ns_mixture(pool, rng) for _ in range(n_strategies)]
    input_dists = [
        random_sv_input_dist(scenario, rng, epsilon) for _ in range(n_strategies)
    ]
    prior = random_weights(n_strategies, rng)
    return AdversaryModel(scenario, behaviors, input_dists, prior)


def model_to_json(model: AdversaryModel) -> dict:
    from .scenario import behavior_to_json

    return {
        "scenario": {
            "N": model.scenario.parties,
            "M": model.scenario.settings,
            "d": model.scenario.outcomes,
        },
        "prior": [format_number(p) for p in model.prior],
        "strategies": [
            {
                "behavior": behavior_to_json(b),
                "inputs": {
                    ",".join(map(str, x)): format_number(p) for x, p in dist.items()
                },
            }
            for b, dist in zip(model.behaviors, model.input_dists)
        ],
    }


def model_from_json(obj: dict, exact: bool = True) -> AdversaryModel:
    from .scenario import behavior_from_json

    s = obj["scenario"]
    scn = Scenario(int(s["N"]), int(s["M"]), int(s["d"]))
    prior = [parse_number(p, exact) for p in obj["prior"]]
    behaviors = []
    input_dists = []
    for strat in obj["strategies"]:
        behaviors.append(behavior_from_json(strat["behavior"], exact))
        dist = {}
        for key, p in strat["inputs"].items():
            x = tuple(int(v) for v in key.split(","))
            dist[x] = parse_number(p, exact)
        input_dists.append(dist)
    return AdversaryModel(scn, behaviors, input_dists, prior)
