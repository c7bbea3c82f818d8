import numpy as np
import pytest

from ratekit.microchain import (
    absorption_probabilities_by_enumeration,
    chain_positions,
    solve_micro_chain,
)


def test_positions_per_case():
    assert chain_positions(3, 2, "interior") == [-1, 0, 1, 2]
    assert chain_positions(3, 2, "lowest") == [0, 1, 2]
    assert chain_positions(3, 2, "highest") == [-1, 0]


def test_immediate_absorption_visits():
    # s = f = 1: one transmission always terminates the sojourn
    mc = solve_micro_chain(0.5, 1, 1, "interior")
    assert mc.visits == {0: 1.0}
    assert mc.xbar == 1.0
    assert mc.p_up == 0.5


def test_symmetric_three_state_chain():
    mc = solve_micro_chain(0.5, 2, 2, "interior")
    assert mc.visits == pytest.approx({-1: 1.0, 0: 1.0, 1: 1.0})
    assert mc.xbar == pytest.approx(3.0)
    assert mc.p_up == pytest.approx(0.5)


def test_visits_sum_to_expected_transmissions():
    rng = np.random.default_rng(5)
    for _ in range(40):
        a = float(rng.uniform(0.05, 0.95))
        s, f = int(rng.integers(1, 10)), int(rng.integers(1, 5))
        pos = ["lowest", "interior", "highest"][int(rng.integers(0, 3))]
        mc = solve_micro_chain(a, s, f, pos)
        assert sum(mc.visits.values()) == pytest.approx(mc.xbar, rel=1e-12)
        assert all(v >= 0 for v in mc.visits.values())


def test_boundary_absorption_probabilities():
    assert solve_micro_chain(0.3, 4, 2, "lowest").p_up == 1.0
    assert solve_micro_chain(0.3, 4, 2, "highest").p_up == 0.0


def test_extreme_corner_remains_exact():
    # expected sojourn ~ 1/alpha^s = 1e24; the rational solve must not lose it
    from ratekit.arf import expected_transmissions

    mc = solve_micro_chain(0.01, 12, 2, "lowest")
    cf = expected_transmissions(0.01, 12, 2, "lowest")
    assert mc.xbar == pytest.approx(cf, rel=1e-12)


def test_enumeration_oracle_matches_immediate_failure_probability():
    up, down_imm, down_other = absorption_probabilities_by_enumeration(0.6, 2, 2, "interior", 24)
    assert down_imm == pytest.approx(0.4**2, abs=1e-12)
    assert up + down_imm + down_other == pytest.approx(1.0, abs=1e-6)  # truncation only
    mc = solve_micro_chain(0.6, 2, 2, "interior")
    assert up == pytest.approx(mc.p_up, abs=1e-6)


def test_enumeration_oracle_highest_position():
    # success runs never absorb here, so truncation decays only like the
    # survival probability; the immediate-path identity is still exact
    up, down_imm, down_other = absorption_probabilities_by_enumeration(0.5, 3, 2, "highest", 26)
    assert up == 0.0
    assert down_imm == pytest.approx(0.25, abs=1e-12)
    assert 1.0 - 0.02 < down_imm + down_other <= 1.0


def test_invalid_arguments():
    with pytest.raises(ValueError):
        solve_micro_chain(1.0, 2, 2, "interior")
    with pytest.raises(ValueError):
        solve_micro_chain(0.5, 0, 2, "interior")
    with pytest.raises(ValueError):
        solve_micro_chain(0.5, 2, 2, "sideways")
