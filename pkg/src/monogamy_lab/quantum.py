"""Quantum-side numerics: qubit monogamy, chained-functional violations,
and key-rate tables.

Three-qubit monogamy: for real pure states and traceless real observables
x.sigma in the (sigma_x, sigma_z) plane, the maximal value of the one-parameter
CHSH form

    I_alpha = alpha (<A1 B1> + <A1 B2>) + <A2 B1> - <A2 B2>

over observables is 2 sqrt(alpha^2 l1 + l2), with l1 >= l2 the eigenvalues of
T T^t for the reduced two-qubit correlation matrix T.  Combined with the
two-qubit correlation trade-off l2 + l1' <= 2 - l1 - l2' this yields the
monogamy inequalities checked here:

    alpha^2 max(I_ab^2, I_ac^2) + min(I_ab^2, I_ac^2) <= 4 alpha^2 (1 + alpha^2)
    I_ab^2 + 4 <A_i C_j>^2 <= 4 (1 + alpha^2)

The second family is saturated (for i = 1) by the states
(b+ |01> + b- |10>)|0> with b+- = sqrt((1 +- sqrt(2) sin t)/2).

Chained-functional violations are minimized numerically over a maximally
entangled two-qudit state with Fourier-basis measurements carrying one phase
per setting and outcome.  Everything here is float arithmetic; exactness is
never claimed.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .bell import chained_bkp
from .scenario import Behavior, Scenario

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


@dataclass
class RealPureState:
    """Real amplitudes over n qubits, unit norm within 1e-12."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError("amplitude count must be 2^n")
        norm = float(np.sum(self.amplitudes**2))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state norm^2 = {norm}, not normalized")


def random_real_state(n_qubits: int, rng: np.random.Generator) -> RealPureState:
    v = rng.standard_normal(2**n_qubits)
    return RealPureState(n_qubits, v / np.linalg.norm(v))


@dataclass(frozen=True)
class PlaneObservable:
    """Dichotomic observable sin(t) sigma_x + cos(t) sigma_z."""

    angle: float

    @property
    def matrix(self) -> np.ndarray:
        return math.sin(self.angle) * SIGMA_X + math.cos(self.angle) * SIGMA_Z

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.sin(self.angle), math.cos(self.angle)])


@dataclass
class CorrelationMatrix:
    """2x2 matrix of <sigma_u x sigma_v> over u, v in (x, z) for a qubit pair."""

    matrix: np.ndarray

    @property
    def singular_squares(self) -> tuple[float, float]:
        s = np.linalg.svd(self.matrix, compute_uv=False)
        return float(s[0] ** 2), float(s[1] ** 2)


def correlation_matrix(state: RealPureState, pair: tuple[int, int]) -> CorrelationMatrix:
    i, j = pair
    if i == j or not (0 <= i < state.n_qubits and 0 <= j < state.n_qubits):
        raise ValueError("need two distinct qubit indices in range")
    psi = state.amplitudes.reshape((2,) * state.n_qubits)
    psi = np.moveaxis(psi, (i, j), (0, 1)).reshape(4, -1)
    rho = psi @ psi.T  # reduced 4x4 density matrix of the pair (real state)
    paulis = (SIGMA_X, SIGMA_Z)
    t = np.empty((2, 2))
    for u, su in enumerate(paulis):
        for v, sv in enumerate(paulis):
            t[u, v] = float(np.trace(rho @ np.kron(su, sv)))
    return CorrelationMatrix(t)


def pair_expectation(t: CorrelationMatrix, a: PlaneObservable, b: PlaneObservable) -> float:
    """<A x B> = a . T b for plane observables."""
    return float(a.direction @ t.matrix @ b.direction)


def alpha_chsh_value(
    t: CorrelationMatrix,
    a_angles: tuple[float, float],
    b_angles: tuple[float, float],
    alpha: float,
) -> float:
    """alpha (<A1B1> + <A1B2>) + <A2B1> - <A2B2> at explicit angles."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    a1, a2 = (PlaneObservable(v) for v in a_angles)
    b1, b2 = (PlaneObservable(v) for v in b_angles)
    return (
        alpha * (pair_expectation(t, a1, b1) + pair_expectation(t, a1, b2))
        + pair_expectation(t, a2, b1)
        - pair_expectation(t, a2, b2)
    )


def alpha_chsh_max(t: CorrelationMatrix, alpha: float) -> float:
    """Maximum of the alpha-CHSH form over plane observables: 2 sqrt(a^2 l1 + l2)."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    l1, l2 = t.singular_squares
    return 2.0 * math.sqrt(alpha**2 * l1 + l2)


def alpha_chsh_max_search(
    t: CorrelationMatrix, alpha: float, n_starts: int = 32, seed: int = 0
) -> float:
    """Direct numerical maximization over the four angles (oracle for
    :func:`alpha_chsh_max`)."""
    rng = np.random.default_rng(seed)

    def neg(angles):
        return -alpha_chsh_value(t, (angles[0], angles[1]), (angles[2], angles[3]), alpha)

    best = -math.inf
    for _ in range(n_starts):
        x0 = rng.uniform(0.0, 2.0 * math.pi, size=4)
        res = minimize(neg, x0, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        best = max(best, -res.fun)
    return best


@dataclass
class QubitMonogamyReport:
    alpha: float
    slack_pair_tradeoff: float  # alpha^2 max + min form
    slack_agreement: float      # I^2 + 4 <XC>^2 form, worst over X in {A, B}
    lambdas_ab: tuple[float, float]
    lambdas_ac: tuple[float, float]
    lambdas_bc: tuple[float, float]

    @property
    def worst_slack(self) -> float:
        return min(self.slack_pair_tradeoff, self.slack_agreement)


def check_qubit_monogamy(state: RealPureState, alpha: float) -> QubitMonogamyReport:
    """Worst-case slacks of both monogamy inequalities for one state.

    The left-hand sides are maximized over all plane observables in closed
    form via the correlation-matrix eigenvalues (both orderings of the pair
    trade-off; both X = A and X = B for the agreement form), so a
    nonnegative slack certifies the inequality for every measurement choice.
    """
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if state.n_qubits != 3:
        raise ValueError("need a three-qubit state")
    lam = correlation_matrix(state, (0, 1)).singular_squares
    lam_t = correlation_matrix(state, (0, 2)).singular_squares
    lam_bc = correlation_matrix(state, (1, 2)).singular_squares
    a2 = alpha**2
    cap_pair = 4.0 * a2 * (1.0 + a2)
    v_ab_major = 4.0 * (a2 * (a2 * lam[0] + lam[1]) + a2 * lam_t[0] + lam_t[1])
    v_ac_major = 4.0 * (a2 * (a2 * lam_t[0] + lam_t[1]) + a2 * lam[0] + lam[1])
    slack_pair = cap_pair - max(v_ab_major, v_ac_major)
    cap_agree = 4.0 * (1.0 + a2)
    v_a_centered = 4.0 * (a2 * lam[0] + lam[1]) + 4.0 * lam_t[0]
    v_b_centered = 4.0 * (a2 * lam[0] + lam[1]) + 4.0 * lam_bc[0]
    slack_agree = cap_agree - max(v_a_centered, v_b_centered)
    return QubitMonogamyReport(
        alpha=alpha,
        slack_pair_tradeoff=slack_pair,
        slack_agreement=slack_agree,
        lambdas_ab=lam,
        lambdas_ac=lam_t,
        lambdas_bc=lam_bc,
    )


def monogamy_montecarlo(
    n_states: int, alphas: Sequence[float], seed: int = 0
) -> dict:
    """Slack statistics over random real three-qubit states."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    violations = 0
    per_alpha = {a: math.inf for a in alphas}
    for _ in range(n_states):
        state = random_real_state(3, rng)
        for a in alphas:
            rep = check_qubit_monogamy(state, a)
            s = rep.worst_slack
            per_alpha[a] = min(per_alpha[a], s)
            worst = min(worst, s)
            if s < -1e-7:
                violations += 1
    return {
        "n_states": n_states,
        "alphas": list(alphas),
        "seed": seed,
        "worst_slack": worst,
        "worst_slack_per_alpha": {str(a): per_alpha[a] for a in alphas},
        "violations": violations,
    }


def saturating_family(theta: float) -> RealPureState:
    """(b+ |01> + b- |10>)|0> with b+- = sqrt((1 +- sqrt(2) sin theta)/2),
    theta in [0, pi/4]; traces the boundary of the agreement monogamy."""
    if not 0.0 <= theta <= math.pi / 4 + 1e-12:
        raise ValueError("theta must lie in [0, pi/4]")
    s = math.sqrt(2.0) * math.sin(theta)
    bp = math.sqrt((1.0 + s) / 2.0)
    bm = math.sqrt((1.0 - s) / 2.0)
    amps = np.zeros(8)
    amps[0b010] = bp
    amps[0b100] = bm
    return RealPureState(3, amps)


def quantum_guessing_bound(violation: float, alpha: float) -> float:
    """Quantum cap on the guessing probability:
    (1 + sqrt(1 + alpha^2 - (I/2)^2))/2, clamped to 1."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    rad = 1.0 + alpha**2 - (violation / 2.0) ** 2
    if rad < -1e-12:
        raise ValueError("violation outside the quantum range")
    return min(1.0, 0.5 * (1.0 + math.sqrt(max(rad, 0.0))))


# ---------------------------------------------------------------------------
# Chained-functional violations on maximally entangled qudit pairs.


@dataclass
class ViolationResult:
    settings: int
    outcomes: int
    value: float
    phases_a: np.ndarray
    phases_b: np.ndarray
    converged: bool


def _term_tables(M: int, d: int):
    """Setting pairs, signs, shifts of the bipartite chained terms, plus the
    gather index J[t, m] mapping the circulant distribution of [A - B] to
    P([Omega] = m) for each term."""
    functional = chained_bkp(M, d)
    xs, ys, signs, shifts = [], [], [], []
    for term in functional.terms:
        by_party = {k: (x, s) for k, x, s in term.coeffs}
        xs.append(by_party[0][0])
        ys.append(by_party[1][0])
        signs.append(by_party[0][1])
        shifts.append(term.shift)
    idx = np.empty((len(xs), d - 1), dtype=int)
    for t in range(len(xs)):
        for m in range(1, d):
            # P([Omega]=m) with Omega = sign (A - B) + shift:
            # [A - B] = sign (m - shift); circulant stores |G(-c)|^2 at c.
            c = (signs[t] * (m - shifts[t])) % d
            idx[t, m - 1] = (-c) % d
    return np.array(xs), np.array(ys), np.array(signs), np.array(shifts), idx


def _violation_objective(M: int, d: int):
    xs, ys, _, _, idx = _term_tables(M, d)
    weights = np.arange(1, d)
    n_terms = len(xs)

    def value(params: np.ndarray) -> float:
        phases = params.reshape(2 * M, d - 1)
        theta_a = np.concatenate([np.zeros((M, 1)), phases[:M]], axis=1)
        theta_b = np.concatenate([np.zeros((M, 1)), phases[M:]], axis=1)
        v = np.exp(-1j * (theta_a[xs] + theta_b[ys]))  # (n_terms, d)
        g = np.fft.ifft(v, axis=1)
        circ = np.abs(g) ** 2  # P([A-B] = -c) at column c; rows sum to 1
        gathered = np.take_along_axis(circ, idx, axis=1)
        return float(np.sum(gathered * weights))

    return value, n_terms


def chained_quantum_violation(
    M: int,
    d: int,
    n_starts: int = 8,
    seed: int = 0,
    maxiter: int | None = None,
) -> ViolationResult:
    """Minimize the chained functional over Fourier-basis measurements on a
    maximally entangled two-qudit pair.

    Measurement bases are |a> = d^{-1/2} sum_q w^{qa} e^{i th_x(q)} |q> per
    setting (conjugated on the second site), giving
    p(a,b|x,y) = |sum_q w^{q(b-a)} e^{-i(th^A_x(q)+th^B_y(q))}|^2 / d^3.
    The first start is the evenly spread phase ladder that is optimal for
    the two-setting and two-outcome cases; remaining starts perturb it.
    Values are upper bounds on the true quantum minimum.
    """
    if M > 16 or d > 8:
        raise ValueError("desk-scale only: need M <= 16 and d <= 8")
    objective, _ = _violation_objective(M, d)
    n_params = 2 * M * (d - 1)

    # Phase ladder seed spacing every chain link by 1/(2M): the objective
    # depends on th^A_x + th^B_y, so Alice descends while Bob ascends.
    q = np.arange(1, d)
    seed_a = np.stack([2 * math.pi * q * (-x / M) / d for x in range(M)])
    seed_b = np.stack([2 * math.pi * q * ((y + 0.5) / M) / d for y in range(M)])
    x_seed = np.concatenate([seed_a, seed_b]).ravel()

    rng = np.random.default_rng(seed)
    best = None
    converged = False
    options = {"xatol": 1e-10, "fatol": 1e-12, "maxiter": maxiter or 400 * n_params}
    for trial in range(n_starts):
        x0 = x_seed if trial == 0 else x_seed + rng.normal(0.0, 0.4, size=n_params)
        res = minimize(objective, x0, method="Nelder-Mead", options=options)
        if best is None or res.fun < best.fun:
            best = res
        converged = converged or bool(res.success)
    phases = best.x.reshape(2 * M, d - 1)
    return ViolationResult(
        settings=M,
        outcomes=d,
        value=float(best.fun),
        phases_a=phases[:M],
        phases_b=phases[M:],
        converged=converged,
    )


def violation_behavior(result: ViolationResult) -> Behavior:
    """The full quantum behavior at the optimized phases (float entries)."""
    M, d = result.settings, result.outcomes
    scn = Scenario(2, M, d)
    theta_a = np.concatenate([np.zeros((M, 1)), result.phases_a], axis=1)
    theta_b = np.concatenate([np.zeros((M, 1)), result.phases_b], axis=1)
    omega = np.exp(2j * math.pi * np.outer(np.arange(d), np.arange(d)) / d)
    probs = []
    for x in range(M):
        for y in range(M):
            v = np.exp(-1j * (theta_a[x] + theta_b[y]))
            col = np.empty((d, d))
            for a in range(d):
                for b in range(d):
                    col[a, b] = abs(np.sum(omega[:, (b - a) % d] * v)) ** 2 / d**3
            probs.extend(col.ravel())
    return Behavior(scn, tuple(float(p) for p in probs))


_VIOLATION_CACHE: dict[tuple[int, int], float] = {}


def cached_violation(M: int, d: int, n_starts: int = 4, seed: int = 0) -> float:
    key = (M, d)
    if key not in _VIOLATION_CACHE:
        _VIOLATION_CACHE[key] = chained_quantum_violation(M, d, n_starts=n_starts, seed=seed).value
    return _VIOLATION_CACHE[key]


# ---------------------------------------------------------------------------
# Key rates.


def key_rate(M: int, d: int, bound: str = "tight", violation: float | None = None) -> float:
    """Lower bound -log2(tau) on the key rate of the chained protocol on a
    maximally entangled pair, with tau the guessing-probability cap
    ('tight': (1+I)/d, 'prior': (1 + d^2 I/4)/d)."""
    i_q = cached_violation(M, d) if violation is None else violation
    if bound == "tight":
        tau = (1.0 + i_q) / d
    elif bound == "prior":
        tau = (1.0 + (d**2 / 4.0) * i_q) / d
    else:
        raise ValueError("bound must be 'tight' or 'prior'")
    tau = min(tau, 1.0)
    return -math.log2(tau)


def min_settings(
    d: int,
    target_rate: float,
    bound: str = "tight",
    max_m: int = 16,
    violation: Callable[[int, int], float] | None = None,
) -> int | None:
    """Smallest M with key_rate(M, d) >= target_rate, or None if the target
    is unreachable (rate can never exceed log2 d) or not reached by max_m."""
    if target_rate > math.log2(d):
        return None
    vio = violation or (lambda m, dd: cached_violation(m, dd))
    for m in range(2, max_m + 1):
        if key_rate(m, d, bound=bound, violation=vio(m, d)) >= target_rate:
            return m
    return None


# ---------------------------------------------------------------------------
# Dataset emitters.


def guessing_curve_csv(d: int, n_points: int = 101, N: int = 2) -> str:
    """Violation grid with both guessing caps (columns I, bound_tight, bound_prior)."""
    from .monogamy import guessing_bound, guessing_bound_prior

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["I", "bound_tight", "bound_prior"])
    for i in range(n_points):
        v = (d - 1) * i / (n_points - 1)
        writer.writerow(
            [repr(v), repr(float(guessing_bound(v, d))), repr(float(guessing_bound_prior(v, N, 2, d)))]
        )
    return buf.getvalue()


def key_rate_table_csv(
    ds: Sequence[int],
    targets: Sequence[float],
    max_m: int = 16,
    violation: Callable[[int, int], float] | None = None,
) -> str:
    """Minimal settings table (columns d, rate_target, min_m_tight, min_m_prior);
    empty cell when the target is not reached by max_m."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["d", "rate_target", "min_m_tight", "min_m_prior"])
    for d in ds:
        for r in targets:
            mt = min_settings(d, r, "tight", max_m, violation)
            mp = min_settings(d, r, "prior", max_m, violation)
            writer.writerow([d, repr(float(r)), mt if mt else "", mp if mp else ""])
    return buf.getvalue()
