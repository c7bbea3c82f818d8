"""Packet-level Monte Carlo simulator for ARF, AARF and PAARF.

The algorithms run as literal per-packet state machines; nothing is shared
with the analytic modules, so simulation estimates are an independent check
on every closed form.

Randomness is counter-based: draw k of stream m for a run seeded with seed
is splitmix64(mix64(seed ^ salt_m) + (k + 1) * GOLDEN), where k is the
transmission index.  Results therefore depend only on (scenario, n_packets,
seed) and are bit-identical across runs and across any parallelism of the
surrounding sweep.  Streams: 0 packet outcome, 1 back-off draw, 2 packet
length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .model import Algorithm, Scenario, validate

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALTS = (0x243F6A8885A308D3, 0x13198A2E03707344, 0xA4093822299F31D0)

_U64_GOLDEN = np.uint64(GOLDEN)
_U64_30 = np.uint64(30)
_U64_27 = np.uint64(27)
_U64_31 = np.uint64(31)
_U64_11 = np.uint64(11)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """splitmix64 finalizer on plain Python ints (used for seed derivation)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *indices: int) -> int:
    """Deterministic child seed for sweep point / algorithm workers."""
    x = mix64(seed ^ 0x9E3779B97F4A7C15)
    for k in indices:
        x = mix64(x ^ ((k * GOLDEN + 0x632BE59BD9B4E019) & MASK64))
    return x


@njit(inline="always")
def _mix(z):
    z = (z ^ (z >> _U64_30)) * _MIX_A
    z = (z ^ (z >> _U64_27)) * _MIX_B
    return z ^ (z >> _U64_31)


@njit(inline="always")
def _u01(base, k):
    u = _mix(base + np.uint64(k + 1) * _U64_GOLDEN)
    return float(u >> _U64_11) * _INV_2_53


@njit(inline="always")
def _udraw(base, k):
    return _mix(base + np.uint64(k + 1) * _U64_GOLDEN)


@njit(cache=True, nogil=True)
def _run(
    variant,  # 0 arf, 1 aarf, 2 paarf
    alphas,
    rates,
    s,
    f,
    beta_max,
    overhead_on,
    t_success,
    t_failure,
    slot,
    cw_min,
    gamma_max,
    use_empirical,
    det_len,
    emp_len,
    emp_cdf,
    n_tx,
    warmup,
    n_batches,
    seed,
    batch_bits,
    batch_txtime,
    batch_ratetime,
    edge_counts,
    state_entries,
    state_time,
    state_time_sq,
    state_tx,
    state_tx_max,
    state_probe_exit_min_tx,
):
    n_rates = len(rates)
    base_out = _mix(np.uint64(seed) ^ np.uint64(0x243F6A8885A308D3))
    base_bo = _mix(np.uint64(seed) ^ np.uint64(0x13198A2E03707344))
    base_len = _mix(np.uint64(seed) ^ np.uint64(0xA4093822299F31D0))
    modulus = gamma_max + 1
    m_per_rate = modulus if overhead_on == 1 and variant == 0 else 1
    n_fb = n_rates * (beta_max + 1)
    window = n_tx - warmup

    rate = 0
    succ_run = 0
    fail_run = 0
    gamma = 0
    beta = 0
    in_probe = 0
    probe_fails = 0
    cur_sid = 0  # ARF: rate 0 / counter 0; AARF: fallback(0, 0)
    visit_time = 0.0
    visit_tx = 0
    visit_clean = warmup == 0

    for t in range(n_tx):
        tx_rate = rate + 1 if in_probe == 1 else rate
        if use_empirical == 1:
            ul = _u01(base_len, t)
            li = 0
            while ul > emp_cdf[li]:
                li += 1
            length = emp_len[li]
        else:
            length = det_len

        dt = 0.0
        if overhead_on == 1:
            w = np.uint64(cw_min << gamma)
            dt += float(np.int64(_udraw(base_bo, t) % w)) * slot
        succ = _u01(base_out, t) < alphas[tx_rate]
        tx_time = length / rates[tx_rate]
        dt += tx_time
        if overhead_on == 1:
            dt += t_success if succ else t_failure

        if t >= warmup:
            b = (t - warmup) * n_batches // window
            batch_ratetime[b, tx_rate] += dt
            batch_txtime[b, tx_rate] += tx_time
            if succ:
                batch_bits[b] += length
        visit_time += dt
        visit_tx += 1
        if overhead_on == 1:
            gamma = 0 if succ else (gamma + 1) % modulus

        new_sid = -1
        if variant == 0:  # ARF
            if succ:
                succ_run += 1
                fail_run = 0
                if succ_run >= s:
                    succ_run = 0
                    if rate < n_rates - 1:
                        rate += 1
                        new_sid = rate * m_per_rate + (gamma if overhead_on == 1 else 0)
            else:
                fail_run += 1
                succ_run = 0
                if fail_run >= f:
                    fail_run = 0
                    if rate > 0:
                        rate -= 1
                        new_sid = rate * m_per_rate + (gamma if overhead_on == 1 else 0)
                    elif overhead_on == 1:
                        # lowest rate: re-enter level 1 with the carried counter
                        new_sid = rate * m_per_rate + gamma
        else:  # AARF / PAARF
            if in_probe == 1:
                if succ:
                    rate += 1
                    beta = 0
                    in_probe = 0
                    succ_run = 0
                    fail_run = 0
                    new_sid = rate * (beta_max + 1) + beta
                else:
                    probe_fails += 1
                    if variant == 1 or probe_fails >= 2:
                        in_probe = 0
                        succ_run = 0
                        fail_run = 0
                        if beta < beta_max:
                            beta += 1
                        new_sid = rate * (beta_max + 1) + beta
                    # PAARF first failure: stay for the second probe packet
            else:
                if succ:
                    succ_run += 1
                    fail_run = 0
                    threshold = s << beta
                    if succ_run >= threshold:
                        if rate < n_rates - 1:
                            succ_run = 0
                            in_probe = 1
                            probe_fails = 0
                            new_sid = n_fb + rate * (beta_max + 1) + beta
                        else:
                            succ_run = threshold  # top rate: nothing to probe
                else:
                    fail_run += 1
                    succ_run = 0
                    if fail_run >= f:
                        fail_run = 0
                        if rate > 0:
                            rate -= 1
                            beta = 0
                            new_sid = rate * (beta_max + 1) + beta
                        # lowest rate: remain in the same state, beta kept

        if new_sid >= 0:
            if visit_clean and t >= warmup:
                state_entries[cur_sid] += 1
                state_time[cur_sid] += visit_time
                state_time_sq[cur_sid] += visit_time * visit_time
                state_tx[cur_sid] += visit_tx
                if visit_tx > state_tx_max[cur_sid]:
                    state_tx_max[cur_sid] = visit_tx
                if variant != 0 and new_sid >= n_fb and (
                    state_probe_exit_min_tx[cur_sid] < 0
                    or visit_tx < state_probe_exit_min_tx[cur_sid]
                ):
                    state_probe_exit_min_tx[cur_sid] = visit_tx
                edge_counts[cur_sid, new_sid] += 1
            cur_sid = new_sid
            visit_time = 0.0
            visit_tx = 0
            visit_clean = t >= warmup


@dataclass(frozen=True)
class SimConfig:
    scenario: Scenario
    n_packets: int
    seed: int
    warmup_packets: int | None = None  # default: 1% of n_packets
    n_batches: int = 50

    @property
    def warmup(self) -> int:
        if self.warmup_packets is not None:
            return self.warmup_packets
        return self.n_packets // 100


@dataclass(frozen=True)
class StateStats:
    entries: int
    mean_sojourn_s: float
    sojourn_stderr_s: float
    mean_tx_per_visit: float
    max_tx_per_visit: int
    #: fewest transmissions seen in a visit that exited toward a probe
    #: state (None if no such exit was observed; fall-back states only)
    min_tx_before_probe: int | None = None


@dataclass(frozen=True)
class SimResult:
    throughput_est_bps: float
    throughput_stderr_bps: float
    time_fraction_est: tuple[float, ...]  # share of total time per rate, sums to 1
    tx_time_fraction_est: tuple[float, ...]  # transmission-only share (f_i / g_i estimate)
    tx_time_fraction_stderr: tuple[float, ...]
    transition_counts: dict[tuple[str, str], int]
    total_sim_time_s: float
    delivered_bits: float
    n_packets: int
    seed: int
    state_stats: dict[str, StateStats] = field(repr=False, default_factory=dict)


def _state_labels(scenario: Scenario) -> list[str]:
    n = scenario.n_rates
    if scenario.algorithm is Algorithm.ARF:
        if scenario.overhead is not None:
            modulus = scenario.overhead.gamma_max + 1
            return [f"r{i}g{g}" for i in range(1, n + 1) for g in range(modulus)]
        return [f"r{i}" for i in range(1, n + 1)]
    b = (scenario.beta_max or 0) + 1
    labels = [f"fb{i}b{beta}" for i in range(1, n + 1) for beta in range(b)]
    labels += [f"pr{i}b{beta}" for i in range(1, n + 1) for beta in range(b)]
    return labels


def simulate(config: SimConfig) -> SimResult:
    """Run the per-packet state machine and estimate steady-state quantities.

    Deterministic in (scenario, n_packets, seed); the standard errors come
    from batch means over the post-warmup window.
    """
    scenario = validate(config.scenario)
    if config.n_packets < 1:
        raise ValueError("n_packets must be >= 1")
    if not (0 <= config.warmup < config.n_packets):
        raise ValueError("warmup must lie in [0, n_packets)")
    if not (0 <= config.seed <= MASK64):
        raise ValueError("seed must be an unsigned 64-bit integer")

    n = scenario.n_rates
    window = config.n_packets - config.warmup
    n_batches = max(1, min(config.n_batches, window))

    variant = {"arf": 0, "aarf": 1, "paarf": 2}[scenario.algorithm.value]
    overhead_on = 1 if scenario.overhead is not None else 0
    oh = scenario.overhead
    beta_max = scenario.beta_max or 0

    dist = scenario.traffic.length_dist
    use_empirical = 1 if dist.kind == "empirical" else 0
    if use_empirical:
        emp_len = np.array(dist.lengths, dtype=np.float64)
        cdf = np.cumsum(np.array(dist.weights, dtype=np.float64))
        cdf /= cdf[-1]
        cdf[-1] = 1.0
        emp_cdf = cdf
    else:
        emp_len = np.zeros(1)
        emp_cdf = np.ones(1)

    labels = _state_labels(scenario)
    n_states = len(labels)
    batch_bits = np.zeros(n_batches)
    batch_txtime = np.zeros((n_batches, n))
    batch_ratetime = np.zeros((n_batches, n))
    edge_counts = np.zeros((n_states, n_states), dtype=np.int64)
    state_entries = np.zeros(n_states, dtype=np.int64)
    state_time = np.zeros(n_states)
    state_time_sq = np.zeros(n_states)
    state_tx = np.zeros(n_states, dtype=np.int64)
    state_tx_max = np.zeros(n_states, dtype=np.int64)
    state_probe_exit_min_tx = np.full(n_states, -1, dtype=np.int64)

    _run(
        variant,
        np.array(scenario.channel.alphas, dtype=np.float64),
        np.array(scenario.ladder.rates_bps, dtype=np.float64),
        scenario.arf_params.s,
        scenario.arf_params.f,
        beta_max,
        overhead_on,
        oh.difs_s + oh.sifs_s + oh.t_ack_s if oh else 0.0,
        oh.difs_s if oh else 0.0,
        oh.slot_s if oh else 0.0,
        oh.cw_min if oh else 1,
        oh.gamma_max if oh else 0,
        use_empirical,
        scenario.traffic.mean_packet_bits,
        emp_len,
        emp_cdf,
        config.n_packets,
        config.warmup,
        n_batches,
        np.uint64(config.seed),
        batch_bits,
        batch_txtime,
        batch_ratetime,
        edge_counts,
        state_entries,
        state_time,
        state_time_sq,
        state_tx,
        state_tx_max,
        state_probe_exit_min_tx,
    )

    rate_time = batch_ratetime.sum(axis=0)
    total_time = float(rate_time.sum())
    delivered = float(batch_bits.sum())
    batch_time = batch_ratetime.sum(axis=1)

    time_fraction = rate_time / rate_time.sum()
    tx_time = batch_txtime.sum(axis=0)
    tx_fraction = tx_time / total_time

    if n_batches >= 2:
        batch_tau = batch_bits / batch_time
        tau_stderr = float(batch_tau.std(ddof=1) / math.sqrt(n_batches))
        batch_frac = batch_txtime / batch_time[:, None]
        frac_stderr = tuple(float(x) for x in batch_frac.std(axis=0, ddof=1) / math.sqrt(n_batches))
    else:
        tau_stderr = float("nan")
        frac_stderr = tuple(float("nan") for _ in range(n))

    transitions: dict[tuple[str, str], int] = {}
    src, dst = np.nonzero(edge_counts)
    for a, b in zip(src, dst):
        transitions[(labels[a], labels[b])] = int(edge_counts[a, b])

    stats: dict[str, StateStats] = {}
    for k, label in enumerate(labels):
        cnt = int(state_entries[k])
        if cnt == 0:
            continue
        mean = state_time[k] / cnt
        if cnt >= 2:
            var = max(state_time_sq[k] - cnt * mean * mean, 0.0) / (cnt - 1)
            stderr = math.sqrt(var / cnt)
        else:
            stderr = float("nan")
        min_probe = int(state_probe_exit_min_tx[k])
        stats[label] = StateStats(
            entries=cnt,
            mean_sojourn_s=mean,
            sojourn_stderr_s=stderr,
            mean_tx_per_visit=state_tx[k] / cnt,
            max_tx_per_visit=int(state_tx_max[k]),
            min_tx_before_probe=min_probe if min_probe >= 0 else None,
        )

    return SimResult(
        throughput_est_bps=delivered / total_time,
        throughput_stderr_bps=tau_stderr,
        time_fraction_est=tuple(float(x) for x in time_fraction),
        tx_time_fraction_est=tuple(float(x) for x in tx_fraction),
        tx_time_fraction_stderr=frac_stderr,
        transition_counts=transitions,
        total_sim_time_s=total_time,
        delivered_bits=delivered,
        n_packets=config.n_packets,
        seed=config.seed,
        state_stats=stats,
    )


def estimate_transition_probability(
    sim: SimConfig | SimResult, edge: tuple[str, str]
) -> tuple[float, float]:
    """Empirical probability of one embedded-chain edge, with its binomial
    standard error.  Accepts a config (runs the simulation) or a finished
    result."""
    result = simulate(sim) if isinstance(sim, SimConfig) else sim
    source = edge[0]
    exits = sum(c for (a, _), c in result.transition_counts.items() if a == source)
    if exits == 0:
        raise KeyError(f"no observed exits from state {source!r}")
    count = result.transition_counts.get(edge, 0)
    p = count / exits
    return p, math.sqrt(p * (1.0 - p) / exits)
