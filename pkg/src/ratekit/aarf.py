"""Steady-state analysis of AARF and its persistent-probe variant PAARF.

Each rate level i < N carries fall-back states (i, beta) whose success
threshold doubles with the stage, 2^beta * s, plus probe states in which a
single transmission (two for PAARF) is attempted at the next higher rate.
The lattice collapses level by level: every stationary probability of a
level is a fixed multiple of that level's stage-0 fall-back probability,
and the inter-level flows then form a plain birth-death recursion.  A dense
linear solve over the full lattice is kept alongside as the oracle for that
reduction.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arf import (
    StateShare,
    ThroughputReport,
    expected_transmissions,
    mean_sojourn,
    up_probability,
)
from .model import AarfParams, Algorithm, Scenario, validate


class DegenerateLoopError(ArithmeticError):
    """Top-stage probe/fall-back loop has no escape mass (cannot occur for
    success probabilities inside (0, 1); kept as a hard assertion)."""


@dataclass(frozen=True)
class AarfState:
    kind: str  # "fallback" | "probe" | "top"
    i: int  # 1-based rate level; probes transmit at rate i + 1
    beta: int

    @property
    def label(self) -> str:
        if self.kind == "probe":
            return f"pr{self.i}b{self.beta}"
        return f"fb{self.i}b{self.beta}"

    @property
    def tx_rate_index(self) -> int:
        """0-based index of the rate this state transmits at."""
        return self.i if self.kind == "probe" else self.i - 1


@dataclass(frozen=True)
class AarfChainSolution:
    states: tuple[AarfState, ...]
    pi: np.ndarray
    mu: np.ndarray
    p_time: np.ndarray
    f: np.ndarray  # per-rate aggregation of p_time

    def index(self, label: str) -> int:
        for k, st in enumerate(self.states):
            if st.label == label:
                return k
        raise KeyError(label)


def fallback_sojourn_and_exit(
    alpha_i: float,
    beta: int,
    params: AarfParams,
    mean_len_bits: float,
    rate_i_bps: float,
    lowest: bool,
) -> tuple[float, float]:
    """Mean sojourn and probe-exit probability of fall-back state (i, beta).

    The state behaves exactly like an ARF sojourn with the success threshold
    replaced by 2^beta * s.  At the lowest rate there is no downward exit,
    so the sojourn runs until the threshold is met and the probe exit is
    certain.
    """
    b = params.threshold(beta)
    f = params.base.f
    if lowest:
        xbar = expected_transmissions(alpha_i, b, f, "lowest")
        return mean_sojourn(xbar, mean_len_bits, rate_i_bps), 1.0
    xbar = expected_transmissions(alpha_i, b, f, "interior")
    return (
        mean_sojourn(xbar, mean_len_bits, rate_i_bps),
        up_probability(alpha_i, b, f),
    )


def probe_params(
    alpha_next: float,
    variant: Algorithm,
    mean_len_bits: float,
    rate_next_bps: float,
) -> tuple[float, float, float]:
    """(mean sojourn, upward probability, fall-back probability) of a probe.

    AARF sends one probe packet at the next rate; PAARF sends a second one
    only if the first fails, so its sojourn is (2 - alpha) transmissions on
    average and it moves up unless both fail.
    """
    if not (0.0 < alpha_next < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha_next}")
    if variant is Algorithm.PAARF:
        p_up = 2.0 * alpha_next - alpha_next * alpha_next
        return (2.0 - alpha_next) * mean_len_bits / rate_next_bps, p_up, 1.0 - p_up
    return mean_len_bits / rate_next_bps, alpha_next, 1.0 - alpha_next


def level_reduce(
    toward_probe: Sequence[float], probe_fail: Sequence[float]
) -> tuple[np.ndarray, np.ndarray]:
    """Express one level's stationary probabilities as multiples of its
    stage-0 fall-back probability.

    toward_probe[beta] is the fall-back exit probability toward the probe
    and probe_fail[beta] the probability that the probe falls back.  Walking
    the stages in order, each stage picks up one more (toward * fail)
    factor; the top stage divides out its self-return mass since a failed
    top-stage probe re-enters the same fall-back state.  The stage-0
    coefficient is 1 by definition (it is the reference state), so with a
    single stage the loop correction lands nowhere: the probe's only inflow
    is then the fall-back state itself and its coefficient is plainly
    toward_probe[0].
    """
    a = np.asarray(toward_probe, dtype=float)
    c = np.asarray(probe_fail, dtype=float)
    if len(a) != len(c) or len(a) == 0:
        raise ValueError("need matching non-empty stage vectors")
    n_stages = len(a)
    fall = np.ones(n_stages)
    for beta in range(1, n_stages):
        fall[beta] = fall[beta - 1] * a[beta - 1] * c[beta - 1]
    top_loop = 1.0 - a[-1] * c[-1]
    if top_loop <= 0.0:
        raise DegenerateLoopError(f"top-stage loop mass {a[-1] * c[-1]} >= 1")
    if n_stages > 1:
        fall[-1] /= top_loop
    probe = fall * a
    return fall, probe


def _enumerate_states(n: int, beta_max: int) -> list[AarfState]:
    states: list[AarfState] = []
    for i in range(1, n):
        states.extend(AarfState("fallback", i, b) for b in range(beta_max + 1))
        states.extend(AarfState("probe", i, b) for b in range(beta_max + 1))
    states.append(AarfState("top", n, 0))
    return states


def _level_inputs(scenario: Scenario) -> tuple[list[dict], float]:
    """Per-level sojourns and transition probabilities, plus the top sojourn."""
    params = scenario.params
    assert isinstance(params, AarfParams)
    n = scenario.n_rates
    alphas = scenario.channel.alphas
    rates = scenario.ladder.rates_bps
    lbar = scenario.traffic.mean_packet_bits
    levels = []
    for i in range(1, n):
        mu_fb, a = [], []
        for beta in range(params.beta_max + 1):
            m, p = fallback_sojourn_and_exit(
                alphas[i - 1], beta, params, lbar, rates[i - 1], lowest=(i == 1)
            )
            mu_fb.append(m)
            a.append(p)
        mu_pr, p_up, p_back = probe_params(alphas[i], scenario.algorithm, lbar, rates[i])
        levels.append(
            {"mu_fb": mu_fb, "mu_pr": mu_pr, "toward_probe": a, "p_up": p_up, "p_back": p_back}
        )
    if n == 1:
        mu_top = mean_sojourn(
            expected_transmissions(alphas[-1], params.base.s, params.base.f, "lowest"),
            lbar,
            rates[-1],
        )
    else:
        mu_top = mean_sojourn(
            expected_transmissions(alphas[-1], params.base.s, params.base.f, "highest"),
            lbar,
            rates[-1],
        )
    return levels, mu_top


def aarf_stationary(scenario: Scenario) -> AarfChainSolution:
    """Stationary solution via the level-by-level collapse.

    Level coefficients come from `level_reduce`; equating the up-flow of
    level i with the down-flow of level i+1 then fixes the stage-0 anchors,
    and normalization plus holding-time weighting give the time fractions.
    """
    validate(scenario)
    if scenario.algorithm not in (Algorithm.AARF, Algorithm.PAARF):
        raise ValueError(f"expected aarf or paarf, got {scenario.algorithm.value}")
    if scenario.overhead is not None:
        raise ValueError("no closed form with MAC overhead; use the simulator")
    params = scenario.params
    assert isinstance(params, AarfParams)
    n = scenario.n_rates
    beta_max = params.beta_max
    states = _enumerate_states(n, beta_max)
    levels, mu_top = _level_inputs(scenario)

    # stage coefficients per level, relative to that level's stage-0 state
    coeffs = []
    for lv in levels:
        fall, probe = level_reduce(lv["toward_probe"], [lv["p_back"]] * (beta_max + 1))
        coeffs.append((fall, probe))

    # stage-0 anchors: up-flow of level i equals down-flow of level i+1
    anchor = np.ones(n)
    for i in range(1, n):
        lv = levels[i - 1]
        fall, probe = coeffs[i - 1]
        up_flow = lv["p_up"] * probe.sum()
        if i == n - 1:
            down = 1.0  # single top state, always exits downward
        else:
            nxt = levels[i]
            nxt_fall, _ = coeffs[i]
            down = float(np.sum((1.0 - np.asarray(nxt["toward_probe"])) * nxt_fall))
        anchor[i] = anchor[i - 1] * up_flow / down

    pi = np.zeros(len(states))
    mu = np.zeros(len(states))
    k = 0
    for i in range(1, n):
        lv = levels[i - 1]
        fall, probe = coeffs[i - 1]
        for beta in range(beta_max + 1):
            pi[k] = anchor[i - 1] * fall[beta]
            mu[k] = lv["mu_fb"][beta]
            k += 1
        for beta in range(beta_max + 1):
            pi[k] = anchor[i - 1] * probe[beta]
            mu[k] = lv["mu_pr"]
            k += 1
    pi[k] = anchor[n - 1]
    mu[k] = mu_top

    pi /= pi.sum()
    weighted = pi * mu
    p_time = weighted / weighted.sum()

    f = np.zeros(n)
    for st, p in zip(states, p_time):
        f[st.tx_rate_index] += p
    return AarfChainSolution(states=tuple(states), pi=pi, mu=mu, p_time=p_time, f=f)


def full_lattice_stationary(scenario: Scenario) -> AarfChainSolution:
    """Dense oracle: stationary solve of the complete embedded chain.

    Builds the full transition matrix over every fall-back and probe state
    and solves pi P = pi directly, bypassing the level reduction.
    """
    validate(scenario)
    params = scenario.params
    assert isinstance(params, AarfParams)
    n = scenario.n_rates
    beta_max = params.beta_max
    states = _enumerate_states(n, beta_max)
    index = {st.label: k for k, st in enumerate(states)}
    levels, mu_top = _level_inputs(scenario)

    m = len(states)
    p = np.zeros((m, m))
    mu = np.zeros(m)
    for k, st in enumerate(states):
        if st.kind == "top":
            mu[k] = mu_top
            if n > 1:
                p[k, index[f"fb{n - 1}b0"]] = 1.0
            else:
                p[k, k] = 1.0
            continue
        lv = levels[st.i - 1]
        if st.kind == "fallback":
            mu[k] = lv["mu_fb"][st.beta]
            a = lv["toward_probe"][st.beta]
            p[k, index[f"pr{st.i}b{st.beta}"]] = a
            if st.i > 1:
                p[k, index[f"fb{st.i - 1}b0"]] = 1.0 - a
            else:
                p[k, k] += 1.0 - a  # lowest rate: failures do not change state
        else:
            mu[k] = lv["mu_pr"]
            up_label = f"fb{st.i + 1}b0" if st.i + 1 < n else f"fb{n}b0"
            p[k, index[up_label]] = lv["p_up"]
            back = min(st.beta + 1, beta_max)
            p[k, index[f"fb{st.i}b{back}"]] = lv["p_back"]

    a_mat = p.T - np.eye(m)
    a_mat[-1, :] = 1.0
    rhs = np.zeros(m)
    rhs[-1] = 1.0
    pi = np.linalg.solve(a_mat, rhs)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()

    weighted = pi * mu
    p_time = weighted / weighted.sum()
    f = np.zeros(n)
    for st, pt in zip(states, p_time):
        f[st.tx_rate_index] += pt
    return AarfChainSolution(states=tuple(states), pi=pi, mu=mu, p_time=p_time, f=f)


def _report(scenario: Scenario, sol: AarfChainSolution) -> ThroughputReport:
    alphas = np.array(scenario.channel.alphas)
    rates = np.array(scenario.ladder.rates_bps)
    tau = float(np.sum(sol.f * alphas * rates))
    states = tuple(
        StateShare(label=st.label, pi=float(sol.pi[k]), mu_s=float(sol.mu[k]),
                   time_fraction=float(sol.p_time[k]))
        for k, st in enumerate(sol.states)
    )
    return ThroughputReport(
        algorithm=scenario.algorithm.value,
        with_overhead=False,
        rates_bps=scenario.ladder.rates_bps,
        time_fractions=tuple(float(x) for x in sol.f),
        tau_bps=tau,
        states=states,
    )


def aarf_throughput(scenario: Scenario) -> ThroughputReport:
    if scenario.algorithm is not Algorithm.AARF:
        raise ValueError(f"expected an AARF scenario, got {scenario.algorithm.value}")
    return _report(scenario, aarf_stationary(scenario))


def paarf_throughput(scenario: Scenario) -> ThroughputReport:
    """PAARF runs through the same pipeline with the two-probe parameters."""
    if scenario.algorithm is not Algorithm.PAARF:
        raise ValueError(f"expected a PAARF scenario, got {scenario.algorithm.value}")
    return _report(scenario, aarf_stationary(scenario))
