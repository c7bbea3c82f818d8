"""Request/response models of the HTTP service.

ScenarioModel mirrors the scenario JSON file format field for field, so a
scenario file can be POSTed as-is.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class OverheadModel(BaseModel):
    difs_us: float
    sifs_us: float
    t_ack_us: float
    cw_min: int
    cw_max: int
    gamma_max: int
    slot_us: float = 20.0


class LengthDistModel(BaseModel):
    kind: Literal["deterministic", "empirical"] = "deterministic"
    lengths: Optional[list[float]] = None
    weights: Optional[list[float]] = None


class ScenarioModel(BaseModel):
    rates_bps: list[float]
    alphas: list[float]
    mean_packet_bits: float
    algorithm: Literal["arf", "aarf", "paarf"]
    s: int
    f: int
    beta_max: Optional[int] = None
    overhead: Optional[OverheadModel] = None
    length_dist: Optional[LengthDistModel] = None

    def as_dict(self) -> dict:
        return self.model_dump(exclude_none=True)


class ValidationIssue(BaseModel):
    code: str
    message: str


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[ValidationIssue] = Field(default_factory=list)


class StateShareModel(BaseModel):
    label: str
    pi: float
    mu_s: float
    time_fraction: float


class AnalyzeResponse(BaseModel):
    algorithm: str
    with_overhead: bool
    rates_bps: list[float]
    time_fractions: list[float]
    tau_bps: float
    states: list[StateShareModel]


class SimulateRequest(BaseModel):
    scenario: ScenarioModel
    n_packets: int = 1_000_000
    seed: int = 1
    warmup_packets: Optional[int] = None


class StateStatsModel(BaseModel):
    entries: int
    mean_sojourn_s: float
    sojourn_stderr_s: float
    mean_tx_per_visit: float
    max_tx_per_visit: int
    min_tx_before_probe: Optional[int] = None


class SimulateResponse(BaseModel):
    throughput_est_bps: float
    throughput_stderr_bps: float
    time_fraction_est: list[float]
    tx_time_fraction_est: list[float]
    tx_time_fraction_stderr: list[float]
    total_sim_time_s: float
    delivered_bits: float
    n_packets: int
    seed: int
    transition_counts: dict[str, int]  # keyed "from->to"
    state_stats: dict[str, StateStatsModel]


class SweepRequest(BaseModel):
    base: ScenarioModel
    param: str
    grid: list[float]
    algorithms: list[Literal["arf", "aarf", "paarf"]] = ["arf", "aarf", "paarf"]
    with_sim: bool = False
    with_overhead: bool = False
    n_packets: int = 1_000_000
    seed: int = 1


class AlgoResultModel(BaseModel):
    analytic_tau_bps: Optional[float] = None
    sim_tau_bps: Optional[float] = None
    sim_stderr_bps: Optional[float] = None
    time_fractions: Optional[list[float]] = None
    sim_only: bool = False
    error: Optional[str] = None


class SweepRowModel(BaseModel):
    param_value: float
    results: dict[str, AlgoResultModel]


class SweepResponse(BaseModel):
    param: str
    algorithms: list[str]
    n_rates: int
    with_sim: bool
    with_overhead: bool
    sim_only_algorithms: list[str]
    complete: bool
    rows: list[SweepRowModel]


class FigureRunRequest(BaseModel):
    with_sim: bool = False
    n_packets: int = 1_000_000
    seed: int = 1
    mean_packet_bits: float = 8000.0


class HealthResponse(BaseModel):
    status: str
    version: str
