"""ratekit: exact steady-state throughput of ARF/AARF/PAARF rate adaptation
over independent-per-rate Bernoulli channels, with and without IEEE 802.11b
MAC overhead, cross-validated by a packet-level Monte Carlo simulator."""

__version__ = "0.1.0"

from .aarf import aarf_throughput, full_lattice_stationary, paarf_throughput
from .arf import ThroughputReport, arf_throughput
from .model import (
    Algorithm,
    Scenario,
    ScenarioValidationError,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate,
    validation_errors,
)
from .overhead import arf_mac_throughput
from .sim import SimConfig, SimResult, estimate_transition_probability, simulate
from .sweeps import SweepSpec, SweepTable, emit, figure_preset, run_sweep

__all__ = [
    "Algorithm",
    "Scenario",
    "ScenarioValidationError",
    "SimConfig",
    "SimResult",
    "SweepSpec",
    "SweepTable",
    "ThroughputReport",
    "__version__",
    "aarf_throughput",
    "arf_mac_throughput",
    "arf_throughput",
    "emit",
    "estimate_transition_probability",
    "figure_preset",
    "full_lattice_stationary",
    "load_scenario",
    "paarf_throughput",
    "run_sweep",
    "scenario_from_dict",
    "scenario_to_dict",
    "simulate",
    "validate",
    "validation_errors",
]
