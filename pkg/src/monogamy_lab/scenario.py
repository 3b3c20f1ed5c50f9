"""Bell scenarios and behaviors.

A scenario fixes N parties, M measurement settings per party and d outcomes
per measurement.  A behavior is the full conditional probability table
p(a|x) for outcome tuples a and setting tuples x, stored flat with the
setting tuple as the outer (row-major) index and the outcome tuple inner.
Outcomes and settings are 0-based everywhere in this package; file formats
use the same convention.

Probabilities are either exact rationals (``fractions.Fraction``) or floats.
Exact mode is required wherever a test certifies an equality; floats are for
quantum numerics and scans.  All operations here are backend-agnostic.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import InputFormatError, ScenarioTooLargeError

DEFAULT_SIZE_CAP = 10**7
_SIZE_CAP_ENV = "MONOGAMY_LAB_CAP"


def size_cap() -> int:
    """Behavior-size cap; override with the MONOGAMY_LAB_CAP env var."""
    raw = os.environ.get(_SIZE_CAP_ENV)
    return int(raw) if raw else DEFAULT_SIZE_CAP


@dataclass(frozen=True)
class Scenario:
    """An (N, M, d) measurement scenario.

    parties: number of parties N >= 1
    settings: measurement settings per party M >= 1
    outcomes: outcomes per measurement d >= 2
    """

    parties: int
    settings: int
    outcomes: int

    def __post_init__(self) -> None:
        if self.parties < 1 or self.settings < 1 or self.outcomes < 2:
            raise ValueError(
                f"need parties >= 1, settings >= 1, outcomes >= 2, got "
                f"({self.parties}, {self.settings}, {self.outcomes})"
            )
        if self.size > size_cap():
            raise ScenarioTooLargeError(
                f"behavior would need {self.size} entries, cap is {size_cap()}"
            )

    # Short aliases matching the standard (N, M, d) notation.
    @property
    def N(self) -> int:
        return self.parties

    @property
    def M(self) -> int:
        return self.settings

    @property
    def d(self) -> int:
        return self.outcomes

    @property
    def n_columns(self) -> int:
        """Number of setting tuples M^N."""
        return self.settings**self.parties

    @property
    def column_size(self) -> int:
        """Number of outcome tuples d^N."""
        return self.outcomes**self.parties

    @property
    def size(self) -> int:
        return self.n_columns * self.column_size

    def column_index(self, x: Sequence[int]) -> int:
        idx = 0
        for xk in x:
            if not 0 <= xk < self.settings:
                raise ValueError(f"setting {xk} out of range for M={self.settings}")
            idx = idx * self.settings + xk
        return idx

    def outcome_index(self, a: Sequence[int]) -> int:
        idx = 0
        for ak in a:
            if not 0 <= ak < self.outcomes:
                raise ValueError(f"outcome {ak} out of range for d={self.outcomes}")
            idx = idx * self.outcomes + ak
        return idx

    def index(self, x: Sequence[int], a: Sequence[int]) -> int:
        return self.column_index(x) * self.column_size + self.outcome_index(a)

    def all_settings(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(range(self.settings), repeat=self.parties)

    def all_outcomes(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(range(self.outcomes), repeat=self.parties)


@dataclass(frozen=True)
class Behavior:
    """A conditional probability table over a scenario.

    ``probs`` has length d^N * M^N, indexed by scenario.index(x, a).
    Immutable after construction; cheap validity checks only (use
    :func:`validate` for the full report).
    """

    scenario: Scenario
    probs: tuple

    def __post_init__(self) -> None:
        if len(self.probs) != self.scenario.size:
            raise ValueError(
                f"expected {self.scenario.size} entries, got {len(self.probs)}"
            )

    def __getitem__(self, key) -> object:
        x, a = key
        return self.probs[self.scenario.index(x, a)]

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, (Fraction, int)) for p in self.probs)

    def column(self, x: Sequence[int]) -> tuple:
        base = self.scenario.column_index(x) * self.scenario.column_size
        return self.probs[base : base + self.scenario.column_size]


@dataclass(frozen=True)
class DeterministicAssignment:
    """Outcome table of a local deterministic strategy: table[party][setting]."""

    table: tuple[tuple[int, ...], ...]

    def validate(self, scenario: Scenario) -> None:
        if len(self.table) != scenario.parties:
            raise ValueError("assignment must cover every party")
        for row in self.table:
            if len(row) != scenario.settings:
                raise ValueError("assignment must cover every setting")
            for o in row:
                if not 0 <= o < scenario.outcomes:
                    raise ValueError(f"assigned outcome {o} out of range")


def validate(behavior: Behavior, tol=0) -> list[str]:
    """Report violated behavior constraints (empty list means valid).

    Checks entrywise nonnegativity and per-column normalization.  With
    exact entries pass tol=0 for exact checks.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    scn = behavior.scenario
    report = []
    for i, p in enumerate(behavior.probs):
        if p < -tol:
            x_idx, a_idx = divmod(i, scn.column_size)
            report.append(f"negative entry {p} at column {x_idx}, outcome {a_idx}")
    for x in scn.all_settings():
        total = sum(behavior.column(x))
        if abs(total - 1) > tol:
            report.append(f"column {x} sums to {total}, expected 1")
    return report


def marginal(
    behavior: Behavior,
    parties: Sequence[int],
    settings: Sequence[int],
    complement_settings: Sequence[int] | None = None,
) -> tuple:
    """Distribution of the outcomes of a party subset at given settings.

    For nonsignalling behaviors the result does not depend on the settings
    of the remaining parties; those are fixed to 0 unless
    ``complement_settings`` supplies them (the convention every module in
    this package shares).
    """
    scn = behavior.scenario
    parties = list(parties)
    if not parties:
        raise ValueError("party subset must be nonempty")
    if len(set(parties)) != len(parties):
        raise ValueError("party subset has duplicates")
    if len(settings) != len(parties):
        raise ValueError("need one setting per selected party")
    rest = [k for k in range(scn.parties) if k not in parties]
    if complement_settings is None:
        complement_settings = [0] * len(rest)
    if len(complement_settings) != len(rest):
        raise ValueError("need one complement setting per remaining party")

    x = [0] * scn.parties
    for k, xk in zip(parties, settings):
        x[k] = xk
    for k, xk in zip(rest, complement_settings):
        x[k] = xk
    col = behavior.column(x)

    out = [0] * (scn.outcomes ** len(parties))
    for a_idx, a in enumerate(itertools.product(range(scn.outcomes), repeat=scn.parties)):
        sub = 0
        for k in parties:
            sub = sub * scn.outcomes + a[k]
        out[sub] += col[a_idx]
    return tuple(out)


def is_nonsignalling(behavior: Behavior, tol=0) -> tuple[bool, object]:
    """Check the no-signalling conditions; returns (ok, worst violation).

    For every proper nonempty subset S of parties, the marginal on S must
    not depend on the settings chosen outside S.
    """
    scn = behavior.scenario
    worst = 0
    for r in range(1, scn.parties):
        for parties in itertools.combinations(range(scn.parties), r):
            rest = [k for k in range(scn.parties) if k not in parties]
            for settings in itertools.product(range(scn.settings), repeat=r):
                ref = None
                for comp in itertools.product(range(scn.settings), repeat=len(rest)):
                    m = marginal(behavior, parties, settings, comp)
                    if ref is None:
                        ref = m
                    else:
                        diff = max(abs(u - v) for u, v in zip(ref, m))
                        if diff > worst:
                            worst = diff
    return worst <= tol, worst


def deterministic_vertex(
    scenario: Scenario, assignment: DeterministicAssignment | Sequence[Sequence[int]]
) -> Behavior:
    """Local deterministic behavior: each party's outcome is a function of its setting."""
    if not isinstance(assignment, DeterministicAssignment):
        assignment = DeterministicAssignment(tuple(tuple(row) for row in assignment))
    assignment.validate(scenario)
    probs = [Fraction(0)] * scenario.size
    for x in scenario.all_settings():
        a = tuple(assignment.table[k][xk] for k, xk in enumerate(x))
        probs[scenario.index(x, a)] = Fraction(1)
    return Behavior(scenario, tuple(probs))


def enumerate_assignments(scenario: Scenario) -> Iterator[DeterministicAssignment]:
    """All d^(N*M) local deterministic strategies."""
    rows = itertools.product(range(scenario.outcomes), repeat=scenario.settings)
    for table in itertools.product(rows, repeat=scenario.parties):
        yield DeterministicAssignment(table)


def uniform_behavior(scenario: Scenario, exact: bool = True) -> Behavior:
    p = Fraction(1, scenario.column_size) if exact else 1.0 / scenario.column_size
    return Behavior(scenario, (p,) * scenario.size)


def mix(behaviors: Sequence[Behavior], weights: Sequence) -> Behavior:
    """Convex combination of behaviors on a common scenario."""
    if len(behaviors) != len(weights) or not behaviors:
        raise ValueError("need one weight per behavior")
    scn = behaviors[0].scenario
    if any(b.scenario != scn for b in behaviors):
        raise ValueError("behaviors live on different scenarios")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    total = sum(weights)
    if total != 1:
        raise ValueError(f"weights sum to {total}, expected 1")
    probs = [0] * scn.size
    for b, w in zip(behaviors, weights):
        if w == 0:
            continue
        for i, p in enumerate(b.probs):
            probs[i] += w * p
    return Behavior(scn, tuple(probs))


def product(b1: Behavior, b2: Behavior) -> Behavior:
    """Independent join of two behaviors sharing M and d.

    p((a1, a2) | (x1, x2)) = p1(a1|x1) * p2(a2|x2), with the first factor's
    parties preceding the second's.
    """
    s1, s2 = b1.scenario, b2.scenario
    if s1.settings != s2.settings or s1.outcomes != s2.outcomes:
        raise ValueError("factors must share settings and outcomes counts")
    scn = Scenario(s1.parties + s2.parties, s1.settings, s1.outcomes)
    probs = [0] * scn.size
    for x1 in s1.all_settings():
        for x2 in s2.all_settings():
            x = x1 + x2
            for a1 in s1.all_outcomes():
                p1 = b1.probs[s1.index(x1, a1)]
                if p1 == 0:
                    continue
                for a2 in s2.all_outcomes():
                    probs[scn.index(x, a1 + a2)] = p1 * b2.probs[s2.index(x2, a2)]
    return Behavior(scn, tuple(probs))


def restrict(behavior: Behavior, parties: Sequence[int]) -> Behavior:
    """Marginal behavior of a party subset (complement settings fixed to 0)."""
    scn = behavior.scenario
    parties = list(parties)
    sub = Scenario(len(parties), scn.settings, scn.outcomes)
    probs = [0] * sub.size
    for xs in sub.all_settings():
        dist = marginal(behavior, parties, xs)
        base = sub.column_index(xs) * sub.column_size
        for a_idx, p in enumerate(dist):
            probs[base + a_idx] = p
    return Behavior(sub, tuple(probs))


# ---------------------------------------------------------------------------
# Serialization.  Values are decimal strings; exact mode also accepts "p/q".


def parse_number(text, exact: bool):
    if isinstance(text, (int, float)):
        return Fraction(text) if exact else float(text)
    try:
        f = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputFormatError(f"cannot parse number {text!r}") from exc
    return f if exact else float(f)


def format_number(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


def behavior_to_json(behavior: Behavior) -> dict:
    scn = behavior.scenario
    return {
        "scenario": {"N": scn.parties, "M": scn.settings, "d": scn.outcomes},
        "encoding": "x-outer-a-inner",
        "values": [format_number(p) for p in behavior.probs],
    }


def behavior_from_json(obj: dict, exact: bool = True) -> Behavior:
    try:
        s = obj["scenario"]
        scn = Scenario(int(s["N"]), int(s["M"]), int(s["d"]))
        encoding = obj.get("encoding", "x-outer-a-inner")
        values = obj["values"]
    except (KeyError, TypeError) as exc:
        raise InputFormatError(f"bad behavior object: {exc}") from exc
    if encoding != "x-outer-a-inner":
        raise InputFormatError(f"unknown encoding {encoding!r}")
    return Behavior(scn, tuple(parse_number(v, exact) for v in values))


def load_behavior(path: str, exact: bool = True) -> Behavior:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{path}: {exc}") from exc
    return behavior_from_json(obj, exact)


def save_behavior(behavior: Behavior, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(behavior_to_json(behavior), fh, indent=1)
        fh.write("\n")
