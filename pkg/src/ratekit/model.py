"""Scenario inputs shared by the analytic and simulation pipelines.

All types are immutable after construction; `validate` is the single
gatekeeper and reports every violation, not just the first.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Any

MAX_COUNT = 2**63 - 1

#: 802.11b slot duration, used when a scenario does not set slot_us.
DEFAULT_SLOT_US = 20.0


class ErrorCode(str, Enum):
    NON_MONOTONE_RATES = "NonMonotoneRates"
    ALPHA_OUT_OF_RANGE = "AlphaOutOfRange"
    LENGTH_MISMATCH = "LengthMismatch"
    BAD_THRESHOLD = "BadThreshold"
    CW_MAX_TOO_SMALL = "CwMaxTooSmall"
    BAD_RATE = "BadRate"
    BAD_TRAFFIC = "BadTraffic"
    BAD_DURATION = "BadDuration"
    BAD_ALGORITHM = "BadAlgorithm"


@dataclass(frozen=True)
class ScenarioError:
    code: ErrorCode
    message: str

    def __str__(self) -> str:
        return f"{self.code.value}: {self.message}"


class ScenarioValidationError(ValueError):
    """Raised by `validate`; carries the full list of violations."""

    def __init__(self, errors: list[ScenarioError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


@dataclass(frozen=True)
class RateLadder:
    """Available bit rates in bit/s, sorted from lowest to highest."""

    rates_bps: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.rates_bps)


@dataclass(frozen=True)
class ChannelModel:
    """Per-rate packet success probabilities, independent across packets."""

    alphas: tuple[float, ...]


@dataclass(frozen=True)
class LengthDistribution:
    """Packet-length law used by the simulator.

    `deterministic` always draws the scenario mean; `empirical` draws from
    the given (length, weight) support, whose weighted mean must equal the
    scenario mean.
    """

    kind: str  # "deterministic" | "empirical"
    lengths: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    @staticmethod
    def deterministic() -> "LengthDistribution":
        return LengthDistribution(kind="deterministic")

    @staticmethod
    def empirical(pairs: list[tuple[float, float]]) -> "LengthDistribution":
        lengths = tuple(float(p[0]) for p in pairs)
        weights = tuple(float(p[1]) for p in pairs)
        return LengthDistribution(kind="empirical", lengths=lengths, weights=weights)

    def mean(self, default: float) -> float:
        if self.kind == "deterministic" or not self.weights:
            return default
        total = sum(self.weights)
        return sum(l * w for l, w in zip(self.lengths, self.weights)) / total


@dataclass(frozen=True)
class TrafficModel:
    mean_packet_bits: float
    length_dist: LengthDistribution = LengthDistribution.deterministic()


@dataclass(frozen=True)
class ArfParams:
    """Consecutive-success threshold s and consecutive-failure threshold f."""

    s: int
    f: int


@dataclass(frozen=True)
class AarfParams:
    """ARF thresholds plus the maximum back-off stage for probe doubling."""

    base: ArfParams
    beta_max: int

    def threshold(self, beta: int) -> int:
        """Success threshold 2^beta * s at back-off stage beta."""
        return self.base.s << beta


@dataclass(frozen=True)
class MacOverheadParams:
    """IEEE 802.11 DCF timing parameters, durations in seconds."""

    difs_s: float
    sifs_s: float
    t_ack_s: float
    cw_min: int
    cw_max: int
    gamma_max: int
    slot_s: float = DEFAULT_SLOT_US * 1e-6


class Algorithm(str, Enum):
    ARF = "arf"
    AARF = "aarf"
    PAARF = "paarf"


@dataclass(frozen=True)
class Scenario:
    ladder: RateLadder
    channel: ChannelModel
    traffic: TrafficModel
    algorithm: Algorithm
    params: ArfParams | AarfParams
    overhead: MacOverheadParams | None = None

    @property
    def n_rates(self) -> int:
        return self.ladder.n

    @property
    def arf_params(self) -> ArfParams:
        return self.params.base if isinstance(self.params, AarfParams) else self.params

    @property
    def beta_max(self) -> int | None:
        return self.params.beta_max if isinstance(self.params, AarfParams) else None

    def with_algorithm(self, algorithm: Algorithm) -> "Scenario":
        return replace(self, algorithm=algorithm)

    def without_overhead(self) -> "Scenario":
        return replace(self, overhead=None)


def validation_errors(scenario: Scenario) -> list[ScenarioError]:
    """Collect every invariant violation of a scenario (empty list if valid)."""
    errs: list[ScenarioError] = []
    rates = scenario.ladder.rates_bps
    alphas = scenario.channel.alphas

    if len(rates) < 1:
        errs.append(ScenarioError(ErrorCode.BAD_RATE, "at least one rate required"))
    if any(r <= 0 for r in rates):
        errs.append(ScenarioError(ErrorCode.BAD_RATE, "all rates must be > 0"))
    if any(b <= a for a, b in zip(rates, rates[1:])):
        errs.append(
            ScenarioError(
                ErrorCode.NON_MONOTONE_RATES,
                f"rates must be strictly increasing, got {list(rates)}",
            )
        )
    if len(alphas) != len(rates):
        errs.append(
            ScenarioError(
                ErrorCode.LENGTH_MISMATCH,
                f"{len(alphas)} success probabilities for {len(rates)} rates",
            )
        )
    bad_alpha = [a for a in alphas if not (0.0 < a < 1.0)]
    if bad_alpha:
        errs.append(
            ScenarioError(
                ErrorCode.ALPHA_OUT_OF_RANGE,
                f"success probabilities must lie in (0, 1), got {bad_alpha}",
            )
        )

    errs.extend(_traffic_errors(scenario.traffic))
    errs.extend(_params_errors(scenario))
    if scenario.overhead is not None:
        errs.extend(_overhead_errors(scenario.overhead))
    return errs


def _traffic_errors(traffic: TrafficModel) -> list[ScenarioError]:
    errs: list[ScenarioError] = []
    lbar = traffic.mean_packet_bits
    if lbar <= 0:
        errs.append(ScenarioError(ErrorCode.BAD_TRAFFIC, "mean packet length must be > 0"))
    dist = traffic.length_dist
    if dist.kind == "empirical":
        if not dist.lengths or len(dist.lengths) != len(dist.weights):
            errs.append(
                ScenarioError(ErrorCode.BAD_TRAFFIC, "empirical distribution needs matching lengths/weights")
            )
        elif any(l <= 0 for l in dist.lengths) or any(w <= 0 for w in dist.weights):
            errs.append(
                ScenarioError(ErrorCode.BAD_TRAFFIC, "empirical lengths and weights must be positive")
            )
        elif lbar > 0 and abs(dist.mean(lbar) - lbar) > 1e-9 * lbar:
            errs.append(
                ScenarioError(
                    ErrorCode.BAD_TRAFFIC,
                    f"empirical mean {dist.mean(lbar)} != mean_packet_bits {lbar}",
                )
            )
    elif dist.kind != "deterministic":
        errs.append(ScenarioError(ErrorCode.BAD_TRAFFIC, f"unknown length distribution {dist.kind!r}"))
    return errs


def _params_errors(scenario: Scenario) -> list[ScenarioError]:
    errs: list[ScenarioError] = []
    p = scenario.arf_params
    if p.s < 1 or p.f < 1:
        errs.append(ScenarioError(ErrorCode.BAD_THRESHOLD, f"s and f must be >= 1, got s={p.s} f={p.f}"))
    needs_stages = scenario.algorithm in (Algorithm.AARF, Algorithm.PAARF)
    if needs_stages and not isinstance(scenario.params, AarfParams):
        errs.append(
            ScenarioError(ErrorCode.BAD_THRESHOLD, f"{scenario.algorithm.value} requires beta_max")
        )
    if isinstance(scenario.params, AarfParams):
        bmax = scenario.params.beta_max
        if bmax < 0:
            errs.append(ScenarioError(ErrorCode.BAD_THRESHOLD, f"beta_max must be >= 0, got {bmax}"))
        elif p.s >= 1 and (bmax > 62 or p.s > MAX_COUNT >> bmax):
            errs.append(
                ScenarioError(ErrorCode.BAD_THRESHOLD, f"2^{bmax} * {p.s} overflows the count range")
            )
    return errs


def _overhead_errors(oh: MacOverheadParams) -> list[ScenarioError]:
    errs: list[ScenarioError] = []
    durations = {"difs": oh.difs_s, "sifs": oh.sifs_s, "t_ack": oh.t_ack_s, "slot": oh.slot_s}
    bad = [k for k, v in durations.items() if v < 0]
    if bad:
        errs.append(ScenarioError(ErrorCode.BAD_DURATION, f"negative durations: {bad}"))
    if oh.cw_min < 1:
        errs.append(ScenarioError(ErrorCode.BAD_THRESHOLD, f"cw_min must be >= 1, got {oh.cw_min}"))
    if oh.gamma_max < 0:
        errs.append(ScenarioError(ErrorCode.BAD_THRESHOLD, f"gamma_max must be >= 0, got {oh.gamma_max}"))
    if oh.gamma_max > 62 or (oh.cw_min >= 1 and oh.cw_min > MAX_COUNT >> max(oh.gamma_max, 0)):
        errs.append(
            ScenarioError(ErrorCode.BAD_THRESHOLD, f"2^{oh.gamma_max} * cw_min overflows the count range")
        )
    elif oh.cw_min >= 1 and oh.gamma_max >= 0 and oh.cw_max < (oh.cw_min << oh.gamma_max) - 1:
        errs.append(
            ScenarioError(
                ErrorCode.CW_MAX_TOO_SMALL,
                f"cw_max={oh.cw_max} < 2^{oh.gamma_max}*{oh.cw_min} - 1",
            )
        )
    return errs


def validate(scenario: Scenario) -> Scenario:
    """Return the scenario unchanged if every invariant holds.

    Raises ScenarioValidationError listing all violations otherwise.
    """
    errs = validation_errors(scenario)
    if errs:
        raise ScenarioValidationError(errs)
    return scenario


# --- JSON wire format -------------------------------------------------------
#
# Field names and units (us for durations) are the on-disk contract used by
# the CLI, the sweep specs and the HTTP service.

def scenario_from_dict(d: dict[str, Any]) -> Scenario:
    try:
        algorithm = Algorithm(str(d["algorithm"]).lower())
    except ValueError:
        raise ScenarioValidationError(
            [ScenarioError(ErrorCode.BAD_ALGORITHM, f"unknown algorithm {d.get('algorithm')!r}")]
        ) from None

    arf = ArfParams(s=int(d["s"]), f=int(d["f"]))
    params: ArfParams | AarfParams = arf
    if d.get("beta_max") is not None:
        params = AarfParams(base=arf, beta_max=int(d["beta_max"]))
    elif algorithm is not Algorithm.ARF:
        raise ScenarioValidationError(
            [ScenarioError(ErrorCode.BAD_THRESHOLD, f"{algorithm.value} requires beta_max")]
        )
    if algorithm is Algorithm.ARF:
        params = arf

    dist = LengthDistribution.deterministic()
    ld = d.get("length_dist")
    if ld is not None and ld.get("kind") == "empirical":
        dist = LengthDistribution.empirical(list(zip(ld["lengths"], ld["weights"])))

    overhead = None
    oh = d.get("overhead")
    if oh is not None:
        overhead = MacOverheadParams(
            difs_s=float(oh["difs_us"]) * 1e-6,
            sifs_s=float(oh["sifs_us"]) * 1e-6,
            t_ack_s=float(oh["t_ack_us"]) * 1e-6,
            cw_min=int(oh["cw_min"]),
            cw_max=int(oh["cw_max"]),
            gamma_max=int(oh["gamma_max"]),
            slot_s=float(oh.get("slot_us", DEFAULT_SLOT_US)) * 1e-6,
        )

    return Scenario(
        ladder=RateLadder(tuple(float(r) for r in d["rates_bps"])),
        channel=ChannelModel(tuple(float(a) for a in d["alphas"])),
        traffic=TrafficModel(mean_packet_bits=float(d["mean_packet_bits"]), length_dist=dist),
        algorithm=algorithm,
        params=params,
        overhead=overhead,
    )


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    d: dict[str, Any] = {
        "rates_bps": list(s.ladder.rates_bps),
        "alphas": list(s.channel.alphas),
        "mean_packet_bits": s.traffic.mean_packet_bits,
        "algorithm": s.algorithm.value,
        "s": s.arf_params.s,
        "f": s.arf_params.f,
    }
    if s.beta_max is not None:
        d["beta_max"] = s.beta_max
    if s.traffic.length_dist.kind == "empirical":
        d["length_dist"] = {
            "kind": "empirical",
            "lengths": list(s.traffic.length_dist.lengths),
            "weights": list(s.traffic.length_dist.weights),
        }
    if s.overhead is not None:
        oh = s.overhead
        d["overhead"] = {
            "difs_us": oh.difs_s * 1e6,
            "sifs_us": oh.sifs_s * 1e6,
            "t_ack_us": oh.t_ack_s * 1e6,
            "cw_min": oh.cw_min,
            "cw_max": oh.cw_max,
            "gamma_max": oh.gamma_max,
            "slot_us": oh.slot_s * 1e6,
        }
    return d


def load_scenario(path: str | Path) -> Scenario:
    """Read, parse and validate a scenario JSON file."""
    with open(path) as fh:
        return validate(scenario_from_dict(json.load(fh)))
