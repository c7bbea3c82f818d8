"""Frozen throughput values for the default two-rate regime.

Each value is pinned by two independent routes that agree to 1e-12 or
better (closed forms vs the exact-rational chain oracle; reduced lattice
vs the dense solve; the overhead chain vs its flow-balance residual) and
by simulation within statistical error, so any future drift is a bug, not
a recalibration.
"""
import pytest

from ratekit.aarf import aarf_throughput, paarf_throughput
from ratekit.arf import arf_throughput
from ratekit.overhead import arf_mac_throughput

from conftest import make_scenario

REL = 1e-12


def test_arf_reference_point():
    report = arf_throughput(make_scenario(alphas=(0.9, 0.2)))
    assert report.tau_bps == pytest.approx(864994.2221748226, rel=REL)
    assert report.time_fractions[0] == pytest.approx(0.9299884443496452, rel=REL)
    assert report.time_fractions[1] == pytest.approx(0.07001155565035469, rel=REL)


def test_aarf_reference_point():
    report = aarf_throughput(make_scenario(alphas=(0.9, 0.2), algorithm="aarf"))
    assert report.tau_bps == pytest.approx(899983.3999144168, rel=REL)


def test_paarf_reference_point():
    report = paarf_throughput(make_scenario(alphas=(0.9, 0.2), algorithm="paarf"))
    assert report.tau_bps == pytest.approx(899941.982942516, rel=REL)


def test_arf_with_dcf_overhead_reference_point():
    report = arf_mac_throughput(make_scenario(alphas=(0.9, 0.2), overhead=True))
    assert report.tau_bps == pytest.approx(803949.7838065858, rel=REL)
