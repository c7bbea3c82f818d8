"""Closed-form steady-state analysis of the ARF rate-adaptation policy.

The policy is a semi-Markov process over the rate ladder: the embedded chain
is a birth-death process whose transition probabilities and mean holding
times follow from the run-length chain at each rate (`microchain`).  The
long-run fraction of time at rate i is pi_i * mu_i normalized, and the
throughput is the success-weighted rate average of those fractions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .microchain import MicroChainSolution, Position, solve_micro_chain
from .model import Algorithm, Scenario, validate


@dataclass(frozen=True)
class ChainSolution:
    """Stationary solution of an embedded chain plus holding-time weighting.

    pi are the embedded-chain stationary probabilities, mu the mean sojourn
    times in seconds, and p_time the resulting long-run time fractions.
    """

    pi: np.ndarray
    mu: np.ndarray
    p_time: np.ndarray


@dataclass(frozen=True)
class StateShare:
    """Per-state diagnostic row of a throughput report."""

    label: str
    pi: float
    mu_s: float
    time_fraction: float


@dataclass(frozen=True)
class ThroughputReport:
    algorithm: str
    with_overhead: bool
    rates_bps: tuple[float, ...]
    time_fractions: tuple[float, ...]
    tau_bps: float
    states: tuple[StateShare, ...]


def geometric_sum(x: float, n: int) -> float:
    """sum_{j=0}^{n-1} x^j by direct summation.

    Direct accumulation keeps the value exact near x = 1 where the
    (1-x^n)/(1-x) form cancels badly; n stays small in practice.
    """
    total = 0.0
    term = 1.0
    for _ in range(n):
        total += term
        term *= x
    return total


def expected_transmissions(alpha: float, s: int, f: int, position: Position) -> float:
    """Expected number of transmissions during one sojourn at a rate.

    Case-matched closed form: at the lowest rate only the success threshold
    matters, at the highest only the failure threshold, and interior rates
    combine both run-length exits.  The interior expression degenerates to a
    plain product when s = 1 or f = 1 (the cross term vanishes).
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if s < 1 or f < 1:
        raise ValueError(f"thresholds must be >= 1, got s={s} f={f}")
    if position == "lowest":
        return geometric_sum(alpha, s) / alpha**s
    if position == "highest":
        return geometric_sum(1.0 - alpha, f) / (1.0 - alpha) ** f
    gs = geometric_sum(alpha, s)
    gf = geometric_sum(1.0 - alpha, f)
    if s == 1 or f == 1:
        return gs * gf
    return gs * gf / (1.0 - (gs - 1.0) * (gf - 1.0))


def up_probability(alpha: float, s: int, f: int) -> float:
    """Probability that an interior sojourn ends with a move up the ladder.

    Complement p_down = 1 - p_up; the ladder boundaries are fixed to exit
    probability 1 by the chain builder, not here.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if s < 1 or f < 1:
        raise ValueError(f"thresholds must be >= 1, got s={s} f={f}")
    gf = geometric_sum(1.0 - alpha, f)
    if s == 1 or f == 1:
        return alpha**s * gf
    gs = geometric_sum(alpha, s)
    return alpha**s * gf / (1.0 - (gs - 1.0) * (gf - 1.0))


def mean_sojourn(xbar: float, mean_len_bits: float, rate_bps: float) -> float:
    """Mean sojourn in seconds: transmissions times mean transmission time."""
    if xbar <= 0 or mean_len_bits <= 0 or rate_bps <= 0:
        raise ValueError("xbar, mean length and rate must all be > 0")
    return xbar * mean_len_bits / rate_bps


def micro_chain_solve(alpha: float, s: int, f: int, position: Position) -> MicroChainSolution:
    """Linear-solve oracle for the closed forms (see `microchain`)."""
    return solve_micro_chain(alpha, s, f, position)


def position_of(i: int, n: int) -> Position:
    """Macro-chain position of 1-based rate index i on an n-rate ladder."""
    if n == 1 or i == 1:
        return "lowest"
    if i == n:
        return "highest"
    return "interior"


def birth_death_stationary(up_probs: list[float] | np.ndarray) -> np.ndarray:
    """Stationary probabilities of a birth-death chain from its up-moves.

    up_probs[i] is the probability of moving from state i to i+1; the first
    entry must be 1 and the last 0 (reflecting boundaries), interior entries
    in (0, 1), and down-moves are the complements.  Products are accumulated
    with incremental renormalization so extreme ratios cannot overflow.
    """
    up = np.asarray(up_probs, dtype=float)
    n = len(up)
    if n == 0:
        raise ValueError("empty chain")
    if n == 1:
        return np.array([1.0])
    if up[0] != 1.0 or up[-1] != 0.0:
        raise ValueError("boundary up-probabilities must be 1 (first) and 0 (last)")
    if np.any((up[1:-1] <= 0.0) | (up[1:-1] >= 1.0)):
        raise ValueError("interior up-probabilities must lie in (0, 1)")

    # Running product in log domain: a raw left-to-right product underflows
    # below 1e-300 for extreme ratios, so the common scale is carried in the
    # exponent and removed against the maximum before normalizing.
    log_w = np.zeros(n)
    for i in range(1, n):
        down_next = 1.0 - up[i] if i < n - 1 else 1.0
        log_w[i] = log_w[i - 1] + np.log(up[i - 1]) - np.log(down_next)
    pi = np.exp(log_w - log_w.max())
    return pi / pi.sum()


def arf_chain(scenario: Scenario) -> ChainSolution:
    """Embedded birth-death chain and time fractions for a validated ARF scenario."""
    validate(scenario)
    n = scenario.n_rates
    alphas = scenario.channel.alphas
    rates = scenario.ladder.rates_bps
    p = scenario.arf_params
    lbar = scenario.traffic.mean_packet_bits

    up = np.zeros(n)
    mu = np.zeros(n)
    for i in range(1, n + 1):
        pos = position_of(i, n)
        xbar = expected_transmissions(alphas[i - 1], p.s, p.f, pos)
        mu[i - 1] = mean_sojourn(xbar, lbar, rates[i - 1])
        if pos == "lowest" and n > 1:
            up[i - 1] = 1.0
        elif pos == "interior":
            up[i - 1] = up_probability(alphas[i - 1], p.s, p.f)
    pi = birth_death_stationary(up)
    weighted = pi * mu
    return ChainSolution(pi=pi, mu=mu, p_time=weighted / weighted.sum())


def arf_throughput(scenario: Scenario) -> ThroughputReport:
    """Steady-state ARF throughput without MAC overhead.

    Time fractions equal the semi-Markov state probabilities and the
    throughput is their success-weighted rate average.
    """
    if scenario.algorithm is not Algorithm.ARF:
        raise ValueError(f"expected an ARF scenario, got {scenario.algorithm.value}")
    if scenario.overhead is not None:
        raise ValueError("overhead-aware ARF lives in ratekit.overhead")
    sol = arf_chain(scenario)
    alphas = np.array(scenario.channel.alphas)
    rates = np.array(scenario.ladder.rates_bps)
    tau = float(np.sum(sol.p_time * alphas * rates))
    states = tuple(
        StateShare(label=f"r{i + 1}", pi=float(sol.pi[i]), mu_s=float(sol.mu[i]),
                   time_fraction=float(sol.p_time[i]))
        for i in range(scenario.n_rates)
    )
    return ThroughputReport(
        algorithm="arf",
        with_overhead=False,
        rates_bps=scenario.ladder.rates_bps,
        time_fractions=tuple(float(x) for x in sol.p_time),
        tau_bps=tau,
        states=states,
    )
