"""Monogamy trade-offs between Bell violation and outsider correlations.

For an (N+1)-party nonsignalling behavior, the violation I of the N-party
chained functional bounds how well the extra party's outcomes can agree with
any single party's outcomes:

    I + <[A^k_x - E_y]> + <[E_y - A^k_x]>  >=  d - 1
    I + 1  >=  d p(A^k_x = [E_y + m])

for every party k, settings x, y and shift m.  Both forms are linked by the
modular-mean identity <[W]> + <[-W]> = d (1 - P([W]=0)).  The bounds are
tight: for every target violation t in [0, d-1] the maximal agreement
probability over the NS polytope equals (1 + t)/d, which the LP scan here
certifies exactly.  The same trade-off caps the guessing probability of an
eavesdropper at (1 + I)/d.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import SignallingInputError
from .bell import BellFunctional, ModularTerm, evaluate, modular_mean, recursive_bkp
from .polylp import LPSolution, optimize_over_ns
from .scenario import Behavior, Scenario, format_number, is_nonsignalling, marginal, restrict


def _require_ns(behavior: Behavior, tol) -> None:
    ok, worst = is_nonsignalling(behavior, tol)
    if not ok:
        raise SignallingInputError(
            f"monogamy relations assume a nonsignalling behavior "
            f"(worst marginal deviation {worst})"
        )


def pair_difference_distribution(
    behavior: Behavior, k: int, x_k: int, l: int, x_l: int
) -> tuple:
    """Distribution of [a_k - a_l] mod d at the given settings."""
    d = behavior.scenario.outcomes
    dist = marginal(behavior, [k, l], [x_k, x_l])
    if l < k:  # marginal orders outcomes by ascending party index
        dist = tuple(
            dist[b * d + a] for a in range(d) for b in range(d)
        )
    out = [0] * d
    for (a, b), p in zip(itertools.product(range(d), repeat=2), dist):
        out[(a - b) % d] += p
    return tuple(out)


def cross_means(behavior: Behavior, k: int, x_k: int, l: int, x_l: int):
    """<[A^k - A^l]> + <[A^l - A^k]> at the given settings."""
    d = behavior.scenario.outcomes
    dist = pair_difference_distribution(behavior, k, x_k, l, x_l)
    rev = tuple(dist[(-i) % d] for i in range(d))
    return modular_mean(dist) + modular_mean(rev)


def monogamy_lhs_general(
    behavior: Behavior,
    k: int,
    x_k: int,
    x_last: int,
    check: bool = True,
    tol=0,
):
    """I^{N,M,d} on the first N parties plus both cross means with the last
    party; at least d-1 for every nonsignalling behavior."""
    scn = behavior.scenario
    if scn.parties < 3:
        raise ValueError("need at least 3 parties (N >= 2 plus the outsider)")
    if not 0 <= k < scn.parties - 1:
        raise ValueError("k must index one of the first N parties")
    if check:
        _require_ns(behavior, tol)
    n = scn.parties - 1
    functional = recursive_bkp(n, scn.settings, scn.outcomes)
    value = evaluate(functional, restrict(behavior, range(n)))
    return value + cross_means(behavior, k, x_k, n, x_last)


def monogamy_lhs_tripartite(
    behavior: Behavior, x_party: int, i: int, j: int, check: bool = True, tol=0
):
    """Three-party special case; x_party in {0, 1} picks which of the two
    Bell-test parties is compared with the third."""
    if behavior.scenario.parties != 3:
        raise ValueError("tripartite form needs exactly 3 parties")
    if x_party not in (0, 1):
        raise ValueError("x_party must be 0 or 1")
    return monogamy_lhs_general(behavior, x_party, i, j, check=check, tol=tol)


def agreement_probability(
    behavior: Behavior,
    k: int,
    x_k: int,
    x_last: int,
    m: int = 0,
    check: bool = True,
    tol=0,
) -> tuple:
    """p(A^k_{x_k} = [A^{last}_{x_last} + m]) and whether I + 1 >= d p holds."""
    scn = behavior.scenario
    d = scn.outcomes
    if check:
        _require_ns(behavior, tol)
    dist = pair_difference_distribution(behavior, k, x_k, scn.parties - 1, x_last)
    p = dist[m % d]
    n = scn.parties - 1
    functional = recursive_bkp(n, scn.settings, scn.outcomes)
    value = evaluate(functional, restrict(behavior, range(n)))
    return p, value + 1 >= d * p


def guessing_bound(violation, d: int):
    """Tight cap (1 + I)/d on any outcome probability, clamped to 1."""
    if violation < 0:
        raise ValueError("violation must be nonnegative")
    if isinstance(violation, float):
        return min((1 + violation) / d, 1.0)
    return min(Fraction(1 + violation, d), Fraction(1))


def guessing_bound_prior(violation, N: int, M: int, d: int):
    """Earlier guessing-probability cap (1 + d^N (N-1) I / 4)/d, clamped.

    M is part of the scenario signature but does not enter the formula.
    Nontrivial only while I < 4(d-1)/(d^N (N-1)).
    """
    if violation < 0:
        raise ValueError("violation must be nonnegative")
    if N < 2 or M < 1:
        raise ValueError("need N >= 2 and M >= 1")
    if isinstance(violation, float):
        return min((1 + d**N * (N - 1) * violation / 4) / d, 1.0)
    return min((1 + Fraction(d**N * (N - 1), 4) * violation) / d, Fraction(1))


# ---------------------------------------------------------------------------
# Dense-vector builders for LP objectives/constraints on the big scenario.


def embedded_bkp(scenario: Scenario) -> BellFunctional:
    """The N-party functional carried on an (N+1)-party scenario (terms only
    reference the first N parties; the outsider's setting defaults to 0)."""
    base = recursive_bkp(scenario.parties - 1, scenario.settings, scenario.outcomes)
    return BellFunctional(scenario, base.terms, base.classical_bound, base.ns_minimum)


def monogamy_functional(scenario: Scenario, k: int, x_k: int, x_last: int) -> BellFunctional:
    """The full left-hand side as one functional on the (N+1)-party scenario."""
    base = embedded_bkp(scenario)
    last = scenario.parties - 1
    cross = (
        ModularTerm(Fraction(1), ((k, x_k, 1), (last, x_last, -1)), 0),
        ModularTerm(Fraction(1), ((k, x_k, -1), (last, x_last, 1)), 0),
    )
    return BellFunctional(scenario, base.terms + cross, Fraction(scenario.outcomes - 1))


def agreement_vector(scenario: Scenario, k: int, x_k: int, x_last: int, m: int = 0) -> list:
    """Dense coefficients of p(A^k_{x_k} = [A^last_{x_last} + m]),
    outsider pairing fixed, remaining settings at 0."""
    scn = scenario
    last = scn.parties - 1
    x = [0] * scn.parties
    x[k] = x_k
    x[last] = x_last
    base = scn.column_index(x) * scn.column_size
    vec = [Fraction(0)] * scn.size
    for a_idx, a in enumerate(scn.all_outcomes()):
        if a[k] == (a[last] + m) % scn.outcomes:
            vec[base + a_idx] = Fraction(1)
    return vec


@dataclass
class TightnessRow:
    target: Fraction
    status: str
    lp_max: Fraction | None
    bound: Fraction
    tight: bool


def default_grid(d: int) -> list[Fraction]:
    top = Fraction(d - 1)
    return [top * q for q in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))]


def _scan_point(scenario: Scenario, k: int, x_k: int, x_last: int, m: int, t: Fraction) -> TightnessRow:
    d = scenario.outcomes
    bound = (1 + t) / d
    if t < 0 or t > d - 1:
        # the trade-off only constrains targets up to the classical bound;
        # beyond it the cap (1+t)/d exceeds 1
        return TightnessRow(t, "out-of-range", None, bound, False)
    i_vec = embedded_bkp(scenario).dense()
    obj = agreement_vector(scenario, k, x_k, x_last, m)
    sol = optimize_over_ns(scenario, obj, "max", extra_eq=[(list(i_vec), t)])
    if sol.status != "optimal":
        return TightnessRow(t, sol.status, None, bound, False)
    return TightnessRow(t, sol.status, sol.value, bound, sol.value == bound)


def tightness_scan(
    scenario: Scenario,
    k: int,
    x_k: int,
    x_last: int,
    grid: Sequence | None = None,
    m: int = 0,
    jobs: int = 1,
) -> list[TightnessRow]:
    """Maximize the agreement probability over NS behaviors with the Bell
    value pinned to each grid target; tight means the LP max equals
    (1 + t)/d exactly.  Grid points are independent LPs and run in parallel
    when jobs > 1."""
    if grid is None:
        grid = default_grid(scenario.outcomes)
    targets = [Fraction(t) for t in grid]
    if jobs > 1 and len(targets) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_scan_point, scenario, k, x_k, x_last, m, t)
                for t in targets
            ]
            return [f.result() for f in futures]
    return [_scan_point(scenario, k, x_k, x_last, m, t) for t in targets]


def minimize_lhs_over_ns(scenario: Scenario, k: int, x_k: int, x_last: int) -> LPSolution:
    """LP minimum of the monogamy left-hand side over the NS polytope."""
    func = monogamy_functional(scenario, k, x_k, x_last)
    return optimize_over_ns(scenario, func.dense(), "min")


# ---------------------------------------------------------------------------
# Reports.


@dataclass
class MonogamyRecord:
    k: int
    x_k: int
    x_last: int
    m: int
    lhs: object
    bound: object
    agreement: object
    satisfied: bool

    @property
    def slack(self):
        return self.lhs - self.bound


def monogamy_report(behavior: Behavior, tol=0) -> list[MonogamyRecord]:
    """Check every (k, x_k, x_last, m) combination on one behavior."""
    scn = behavior.scenario
    _require_ns(behavior, tol)
    d = scn.outcomes
    n = scn.parties - 1
    functional = recursive_bkp(n, scn.settings, scn.outcomes)
    value = evaluate(functional, restrict(behavior, range(n)))
    records = []
    for k in range(n):
        for x_k in range(scn.settings):
            for x_last in range(scn.settings):
                dist = pair_difference_distribution(behavior, k, x_k, n, x_last)
                for m in range(d):
                    p = dist[m]
                    records.append(
                        MonogamyRecord(
                            k=k,
                            x_k=x_k,
                            x_last=x_last,
                            m=m,
                            lhs=value + 1,
                            bound=d * p,
                            agreement=p,
                            satisfied=value + 1 >= d * p,
                        )
                    )
    return records


def report_to_csv(records: Sequence[MonogamyRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["k", "x_k", "x_last", "m", "t", "lhs", "bound", "slack"])
    for r in records:
        writer.writerow(
            [r.k, r.x_k, r.x_last, r.m, "",
             format_number(r.lhs), format_number(r.bound), format_number(r.slack)]
        )
    return buf.getvalue()


def report_to_json(records: Sequence[MonogamyRecord]) -> list[dict]:
    return [
        {
            "k": r.k,
            "x_k": r.x_k,
            "x_last": r.x_last,
            "m": r.m,
            "lhs": format_number(r.lhs),
            "bound": format_number(r.bound),
            "agreement": format_number(r.agreement),
            "slack": format_number(r.slack),
            "satisfied": r.satisfied,
        }
        for r in records
    ]


def scan_to_json(rows: Sequence[TightnessRow], k: int, x_k: int, x_last: int, m: int = 0) -> list[dict]:
    return [
        {
            "k": k,
            "x_k": x_k,
            "x_last": x_last,
            "m": m,
            "t": format_number(r.target),
            "status": r.status,
            "lp_max": format_number(r.lp_max) if r.lp_max is not None else None,
            "bound": format_number(r.bound),
            "tight": r.tight,
        }
        for r in rows
    ]


def scan_to_csv(rows: Sequence[TightnessRow], k: int, x_k: int, x_last: int, m: int = 0) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["k", "x_k", "x_last", "m", "t", "lhs", "bound", "slack"])
    for r in rows:
        lhs = r.lp_max if r.lp_max is not None else ""
        slack = r.lp_max - r.bound if r.lp_max is not None else ""
        writer.writerow(
            [k, x_k, x_last, m, format_number(r.target),
             format_number(lhs) if lhs != "" else "",
             format_number(r.bound),
             format_number(slack) if slack != "" else r.status]
        )
    return buf.getvalue()
