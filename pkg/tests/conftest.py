from __future__ import annotations

from typing import Any

import pytest

from ratekit.model import Scenario, scenario_from_dict, validate

OVERHEAD_80211B: dict[str, Any] = {
    "difs_us": 50.0,
    "sifs_us": 10.0,
    "t_ack_us": 112.0,
    "cw_min": 32,
    "cw_max": 1024,
    "gamma_max": 5,
    "slot_us": 20.0,
}


def make_scenario(
    alphas=(0.9, 0.2),
    rates=(1e6, 2e6),
    algorithm: str = "arf",
    s: int = 10,
    f: int = 2,
    beta_max: int | None = None,
    mean_packet_bits: float = 8000.0,
    overhead: dict | bool | None = None,
    length_dist: dict | None = None,
) -> Scenario:
    d: dict[str, Any] = {
        "rates_bps": list(rates),
        "alphas": list(alphas),
        "mean_packet_bits": mean_packet_bits,
        "algorithm": algorithm,
        "s": s,
        "f": f,
    }
    if beta_max is None and algorithm in ("aarf", "paarf"):
        beta_max = 3
    if beta_max is not None:
        d["beta_max"] = beta_max
    if overhead is True:
        d["overhead"] = dict(OVERHEAD_80211B)
    elif isinstance(overhead, dict):
        d["overhead"] = overhead
    if length_dist is not None:
        d["length_dist"] = length_dist
    return validate(scenario_from_dict(d))


@pytest.fixture
def scenario_factory():
    return make_scenario
