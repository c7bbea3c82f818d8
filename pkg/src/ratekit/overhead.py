"""ARF throughput inclusive of IEEE 802.11b DCF overhead.

Every transmission pays inter-frame spacings, the ACK time on success, and
a binary-exponential back-off whose window depends on the retransmission
counter.  The counter is incremented per failure, reset per success and
wraps modulo gamma_max + 1 (a drop is just a failed transmission whose
counter wrapped).  Because the counter value at a rate change is carried
into the next rate, the embedded chain lives on (rate, entry-counter)
pairs; its per-state sojourns follow from expected visit counts of the
run-length chain, split into a pre-first-success phase (counter continues
from the carried value) and the remainder (counter restarts from zero).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arf import (
    StateShare,
    ThroughputReport,
    expected_transmissions,
    up_probability,
)
from .microchain import Position, solve_micro_chain
from .model import Algorithm, MacOverheadParams, Scenario, validate


class SingularChainError(ArithmeticError):
    """Stationary solve of the (rate, counter) chain failed; cannot occur
    for success probabilities inside (0, 1)."""


@dataclass(frozen=True)
class OverheadTimes:
    """Fixed per-transmission overheads and the mean back-off window."""

    t_success_s: float
    t_failure_s: float
    cw_min: int
    gamma_max: int
    slot_s: float

    def backoff_mean_slots(self, gamma: int) -> float:
        return ((self.cw_min << gamma) - 1) / 2.0

    def backoff_mean_s(self, gamma: int) -> float:
        return self.backoff_mean_slots(gamma) * self.slot_s


def overhead_times(params: MacOverheadParams) -> OverheadTimes:
    """Per-outcome overhead durations: DIFS+SIFS+ACK on success, DIFS on failure."""
    return OverheadTimes(
        t_success_s=params.difs_s + params.sifs_s + params.t_ack_s,
        t_failure_s=params.difs_s,
        cw_min=params.cw_min,
        gamma_max=params.gamma_max,
        slot_s=params.slot_s,
    )


def expected_visits(alpha: float, s: int, f: int, position: Position) -> dict[int, float]:
    """Expected visits to each run position during one sojourn (entry at 0).

    Each visit is exactly one transmission, so the visit counts sum to the
    expected transmission count of the sojourn.
    """
    return solve_micro_chain(alpha, s, f, position).visits


def _position_for_level(i: int, n: int) -> Position:
    # In the overhead chain every level exits on f consecutive failures
    # (at the lowest rate the exit returns to the same level with an
    # updated counter), so only the top level lacks the success exit.
    return "highest" if i == n else "interior"


def _two_phase_states(s: int, f: int, position: Position) -> list[tuple[str, int]]:
    """Transient states of the sojourn chain split by first-success phase.

    ("pre", j): j consecutive failures since entry, no success yet.
    ("succ", k): k consecutive successes since the last failure (k >= 1
    interior; the top level keeps a single k = 0 state as the success run
    has no exit there).
    ("post", j): j consecutive failures after at least one success.
    """
    states: list[tuple[str, int]] = [("pre", j) for j in range(f)]
    if position == "highest":
        states.append(("succ", 0))
        states.extend(("post", j) for j in range(1, f))
    elif s > 1:
        states.extend(("succ", k) for k in range(1, s))
        states.extend(("post", j) for j in range(1, f))
    return states


def _two_phase_visits(
    alpha: float, s: int, f: int, position: Position
) -> tuple[list[tuple[str, int]], np.ndarray]:
    """Expected visits per two-phase state, starting the sojourn at ("pre", 0)."""
    states = _two_phase_states(s, f, position)
    index = {st: k for k, st in enumerate(states)}
    n = len(states)
    q = np.zeros((n, n))
    succ_target = ("succ", 0) if position == "highest" else ("succ", 1)
    for k, (phase, j) in enumerate(states):
        if phase == "pre" or phase == "post":
            if j + 1 < f:
                q[k, index[(phase, j + 1)]] += 1.0 - alpha
            if succ_target in index:
                q[k, index[succ_target]] += alpha
        else:  # succ
            if position == "highest":
                q[k, index[("succ", 0)]] += alpha
            elif j + 1 < s:
                q[k, index[("succ", j + 1)]] += alpha
            if f > 1:
                q[k, index[("post", 1)]] += 1.0 - alpha
    e0 = np.zeros(n)
    e0[index[("pre", 0)]] = 1.0
    visits = np.linalg.solve((np.eye(n) - q).T, e0)
    return states, visits


def sojourn_with_overhead(i: int, gamma: int, scenario: Scenario) -> float:
    """Mean time spent in state (rate i, entry counter gamma), in seconds.

    Every visit to a run position contributes its transmission time, the
    mean back-off for the counter value attached to that position, and the
    expected ACK/DIFS overhead.  Pre-first-success failure positions carry
    counter (gamma + j) mod (gamma_max + 1); afterwards the counter is the
    current failure-run length.
    """
    validate(scenario)
    oh = scenario.overhead
    if oh is None:
        raise ValueError("scenario has no overhead parameters")
    if not (0 <= gamma <= oh.gamma_max):
        raise ValueError(f"gamma must lie in [0, {oh.gamma_max}], got {gamma}")
    times = overhead_times(oh)
    n = scenario.n_rates
    alpha = scenario.channel.alphas[i - 1]
    rate = scenario.ladder.rates_bps[i - 1]
    lbar = scenario.traffic.mean_packet_bits
    p = scenario.arf_params
    modulus = oh.gamma_max + 1

    states, visits = _two_phase_visits(alpha, p.s, p.f, _position_for_level(i, n))
    per_tx_fixed = lbar / rate + alpha * times.t_success_s + (1.0 - alpha) * times.t_failure_s
    total = 0.0
    for (phase, j), v in zip(states, visits):
        if phase == "pre":
            counter = (gamma + j) % modulus
        elif phase == "post":
            counter = j % modulus
        else:
            counter = 0
        total += v * (per_tx_fixed + times.backoff_mean_s(counter))
    return total


def transmission_time(i: int, scenario: Scenario) -> float:
    """Mean time spent actually transmitting during one sojourn at rate i.

    Independent of the entry counter: the expected transmission count times
    the mean packet time, exactly the overhead-free sojourn.
    """
    n = scenario.n_rates
    alpha = scenario.channel.alphas[i - 1]
    p = scenario.arf_params
    xbar = expected_transmissions(alpha, p.s, p.f, _position_for_level(i, n))
    return xbar * scenario.traffic.mean_packet_bits / scenario.ladder.rates_bps[i - 1]


def overhead_transitions(i: int, gamma: int, scenario: Scenario) -> dict[tuple[int, int], float]:
    """Successor distribution of state (i, gamma) over (rate, entry counter).

    Up-moves reset the counter (they follow a success).  Down-moves carry
    (gamma + f) mod (gamma_max + 1) when the first f transmissions all fail,
    and f mod (gamma_max + 1) when a success intervened; at the lowest rate
    both land back on level 1, at the top there is no up-move.
    """
    validate(scenario)
    oh = scenario.overhead
    if oh is None:
        raise ValueError("scenario has no overhead parameters")
    n = scenario.n_rates
    alpha = scenario.channel.alphas[i - 1]
    p = scenario.arf_params
    modulus = oh.gamma_max + 1

    p_up = up_probability(alpha, p.s, p.f) if i < n else 0.0
    p_down_immediate = (1.0 - alpha) ** p.f
    if p.s == 1 and i < n:
        # any success exits upward, so a down-move can only be immediate
        p_down_other = 0.0
    else:
        p_down_other = max(1.0 - p_up - p_down_immediate, 0.0)
    down_level = i - 1 if i > 1 else 1

    dist: dict[tuple[int, int], float] = {}
    if i < n:
        dist[(i + 1, 0)] = p_up
    key = (down_level, (gamma + p.f) % modulus)
    dist[key] = dist.get(key, 0.0) + p_down_immediate
    if p_down_other > 0.0:
        key = (down_level, p.f % modulus)
        dist[key] = dist.get(key, 0.0) + p_down_other
    return dist


def overhead_edge_set(
    n_rates: int, s: int, f: int, gamma_max: int
) -> set[tuple[tuple[int, int], tuple[int, int]]]:
    """Edges of the (rate, counter) chain restricted to states reachable
    from (1, 0).  Structure only: which edges exist does not depend on the
    success probabilities (all lie strictly inside (0, 1)), only on whether
    the state has a success exit (with s = 1 any success leaves upward, so
    below the top rate a down-move can only be the immediate-failure kind).
    """
    modulus = gamma_max + 1

    def successors(state: tuple[int, int]) -> set[tuple[int, int]]:
        i, gamma = state
        out: set[tuple[int, int]] = set()
        if i < n_rates:
            out.add((i + 1, 0))
        down_level = i - 1 if i > 1 else 1
        out.add((down_level, (gamma + f) % modulus))
        if s > 1 or i == n_rates:
            out.add((down_level, f % modulus))
        return out

    edges: set[tuple[tuple[int, int], tuple[int, int]]] = set()
    frontier = [(1, 0)]
    seen = {(1, 0)}
    while frontier:
        st = frontier.pop()
        for nxt in successors(st):
            edges.add((st, nxt))
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return edges


@dataclass(frozen=True)
class OverheadChainSolution:
    states: tuple[tuple[int, int], ...]  # (rate index 1..N, entry counter)
    pi: np.ndarray
    mu: np.ndarray
    theta: np.ndarray  # transmission-only time per sojourn, counter-independent
    p_time: np.ndarray
    g: np.ndarray  # per-rate share of total time spent transmitting


def overhead_chain(scenario: Scenario) -> OverheadChainSolution:
    """Stationary solution of the (rate, entry-counter) embedded chain."""
    validate(scenario)
    oh = scenario.overhead
    if oh is None:
        raise ValueError("scenario has no overhead parameters")
    n = scenario.n_rates
    modulus = oh.gamma_max + 1
    states = [(i, g) for i in range(1, n + 1) for g in range(modulus)]
    index = {st: k for k, st in enumerate(states)}
    m = len(states)

    p = np.zeros((m, m))
    mu = np.zeros(m)
    theta = np.zeros(m)
    for k, (i, g) in enumerate(states):
        for target, prob in overhead_transitions(i, g, scenario).items():
            p[k, index[target]] += prob
        mu[k] = sojourn_with_overhead(i, g, scenario)
        theta[k] = transmission_time(i, scenario)

    a_mat = p.T - np.eye(m)
    a_mat[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(a_mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularChainError(str(exc)) from exc
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    if np.any(pi < 0.0):
        raise SingularChainError(f"negative stationary mass: {pi.min()}")
    pi /= pi.sum()
    residual = np.max(np.abs(pi @ p - pi))
    if residual > 1e-10:
        raise SingularChainError(f"flow-balance residual {residual}")

    weighted = pi * mu
    p_time = weighted / weighted.sum()
    g_frac = np.zeros(n)
    for (i, _), w, t in zip(states, pi, theta):
        g_frac[i - 1] += w * t
    g_frac /= weighted.sum()
    return OverheadChainSolution(
        states=tuple(states), pi=pi, mu=mu, theta=theta, p_time=p_time, g=g_frac
    )


def arf_mac_throughput(scenario: Scenario) -> ThroughputReport:
    """ARF throughput with DCF overhead.

    The per-rate time fractions g count transmission time only, against a
    denominator that includes all overhead, so they sum below 1 whenever
    any overhead duration is positive.
    """
    if scenario.algorithm is not Algorithm.ARF:
        raise ValueError(f"expected an ARF scenario, got {scenario.algorithm.value}")
    sol = overhead_chain(scenario)
    alphas = np.array(scenario.channel.alphas)
    rates = np.array(scenario.ladder.rates_bps)
    tau = float(np.sum(sol.g * alphas * rates))
    states = tuple(
        StateShare(label=f"r{i}g{g}", pi=float(sol.pi[k]), mu_s=float(sol.mu[k]),
                   time_fraction=float(sol.p_time[k]))
        for k, (i, g) in enumerate(sol.states)
    )
    return ThroughputReport(
        algorithm="arf",
        with_overhead=True,
        rates_bps=scenario.ladder.rates_bps,
        time_fractions=tuple(float(x) for x in sol.g),
        tau_bps=tau,
        states=states,
    )
