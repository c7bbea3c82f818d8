import math

import pytest

from ratekit.aarf import aarf_throughput
from ratekit.arf import arf_throughput
from ratekit.model import scenario_from_dict, scenario_to_dict, validate
from ratekit.sweeps import (
    OVERHEAD_80211B,
    SweepSpec,
    alpha1_grid,
    emit,
    figure_preset,
    parse_csv,
    run_sweep,
    set_param,
    sweep_spec_from_dict,
    sweep_spec_to_dict,
    table_from_wire,
)

from conftest import make_scenario


def base_dict(**overrides):
    d = scenario_to_dict(make_scenario(algorithm="aarf", beta_max=3))
    d.update(overrides)
    return d


def small_spec(**kw):
    defaults = dict(
        base=base_dict(),
        param="alphas[0]",
        grid=(0.8, 0.9, 0.99),
        algorithms=("arf", "aarf", "paarf"),
    )
    defaults.update(kw)
    return SweepSpec(**defaults)


class TestSetParam:
    def test_indexed_path(self):
        d = set_param({"alphas": [0.1, 0.2]}, "alphas[1]", 0.5)
        assert d["alphas"] == [0.1, 0.5]

    def test_nested_path(self):
        d = set_param({"overhead": {"difs_us": 50}}, "overhead.difs_us", 30)
        assert d["overhead"]["difs_us"] == 30

    def test_plain_field(self):
        assert set_param({"s": 10}, "s", 4)["s"] == 4

    def test_base_not_mutated(self):
        base = {"alphas": [0.1, 0.2]}
        set_param(base, "alphas[0]", 0.9)
        assert base["alphas"] == [0.1, 0.2]

    def test_bad_paths(self):
        with pytest.raises(KeyError):
            set_param({"alphas": [0.1]}, "alphas[3]", 0.5)
        with pytest.raises(KeyError):
            set_param({"alphas": [0.1]}, "betas[0]", 0.5)


class TestRunSweep:
    def test_analytic_columns_match_direct_calls(self):
        table = run_sweep(small_spec())
        assert [r.param_value for r in table.rows] == [0.8, 0.9, 0.99]
        for row in table.rows:
            d = set_param(small_spec().base, "alphas[0]", row.param_value)
            d["algorithm"] = "arf"
            scn = validate(scenario_from_dict(d))
            assert row.results["arf"].analytic_tau_bps == pytest.approx(
                arf_throughput(scn).tau_bps
            )
            d["algorithm"] = "aarf"
            scn = validate(scenario_from_dict(d))
            assert row.results["aarf"].analytic_tau_bps == pytest.approx(
                aarf_throughput(scn).tau_bps
            )
            assert row.results["arf"].sim_tau_bps is None  # with_sim off

    def test_single_point_grid(self):
        table = run_sweep(small_spec(grid=(0.9,)))
        assert len(table.rows) == 1
        assert table.complete

    def test_per_point_errors_recorded_not_raised(self):
        table = run_sweep(small_spec(grid=(0.9, 1.5)))  # alpha = 1.5 is invalid
        assert not table.complete
        good, bad = table.rows
        assert good.results["arf"].error is None
        assert bad.results["arf"].error is not None
        assert "AlphaOutOfRange" in bad.results["arf"].error

    def test_sim_columns_present_iff_requested(self):
        table = run_sweep(small_spec(grid=(0.9,), with_sim=True, n_packets=100_000))
        r = table.rows[0].results["arf"]
        assert r.sim_tau_bps is not None and r.sim_stderr_bps is not None
        assert abs(r.sim_tau_bps - r.analytic_tau_bps) < 5 * r.sim_stderr_bps

    def test_overhead_aarf_is_simulation_only(self):
        spec = small_spec(
            base=base_dict(overhead=dict(OVERHEAD_80211B)),
            grid=(0.9,),
            with_overhead=True,
            n_packets=100_000,
        )
        table = run_sweep(spec)
        assert table.sim_only_algorithms == ("aarf", "paarf")
        row = table.rows[0]
        assert row.results["arf"].analytic_tau_bps is not None
        assert row.results["aarf"].analytic_tau_bps is None
        assert row.results["aarf"].sim_tau_bps is not None  # simulated even without with_sim
        assert row.results["aarf"].sim_only

    def test_deterministic_across_thread_counts(self, monkeypatch):
        spec = small_spec(with_sim=True, n_packets=50_000)
        monkeypatch.setenv("RATEKIT_THREADS", "1")
        serial = run_sweep(spec)
        monkeypatch.setenv("RATEKIT_THREADS", "4")
        parallel = run_sweep(spec)
        for a, b in zip(serial.rows, parallel.rows):
            for algo in spec.algorithms:
                assert a.results[algo].sim_tau_bps == b.results[algo].sim_tau_bps
                assert a.results[algo].analytic_tau_bps == b.results[algo].analytic_tau_bps


class TestEmission:
    def test_csv_columns_exact(self):
        table = run_sweep(small_spec(grid=(0.9,)))
        lines = [l for l in emit(table, "csv").splitlines() if not l.startswith("#")]
        assert lines[0] == "param,algo,analytic_tau_bps,sim_tau_bps,sim_stderr_bps,f_1,f_2"
        assert len(lines) == 1 + 3  # header + one row per algorithm

    def test_missing_sim_fields_are_empty_not_zero(self):
        table = run_sweep(small_spec(grid=(0.9,)))
        row = emit(table, "csv").splitlines()[1].split(",")
        assert row[3] == "" and row[4] == ""

    def test_round_trip_of_analytic_columns(self):
        table = run_sweep(small_spec())
        parsed = parse_csv(emit(table, "csv"))
        assert parsed.n_rates == table.n_rates
        for orig, back in zip(table.rows, parsed.rows):
            assert back.param_value == orig.param_value
            for algo in table.algorithms:
                assert back.results[algo].analytic_tau_bps == pytest.approx(
                    orig.results[algo].analytic_tau_bps, rel=1e-15
                )
                assert back.results[algo].time_fractions == pytest.approx(
                    orig.results[algo].time_fractions, rel=1e-15
                )

    def test_sim_only_flag_in_header_comment(self):
        spec = small_spec(
            base=base_dict(overhead=dict(OVERHEAD_80211B)),
            grid=(0.9,),
            with_overhead=True,
            n_packets=50_000,
        )
        text = emit(run_sweep(spec), "csv")
        assert text.splitlines()[0] == "# simulation-only (no closed form): aarf,paarf"

    def test_dat_blocks_per_algorithm(self):
        table = run_sweep(small_spec(grid=(0.8, 0.9)))
        text = emit(table, "dat")
        assert text.count("# algo:") == 3
        blocks = text.split("\n\n")
        assert len([b for b in blocks if b.strip()]) == 3

    def test_wire_round_trip(self):
        table = run_sweep(small_spec(grid=(0.9,)))
        wire = {
            "param": table.param,
            "algorithms": list(table.algorithms),
            "n_rates": table.n_rates,
            "with_sim": table.with_sim,
            "with_overhead": table.with_overhead,
            "rows": [
                {
                    "param_value": r.param_value,
                    "results": {
                        a: {
                            "analytic_tau_bps": x.analytic_tau_bps,
                            "sim_tau_bps": x.sim_tau_bps,
                            "sim_stderr_bps": x.sim_stderr_bps,
                            "time_fractions": list(x.time_fractions) if x.time_fractions else None,
                            "sim_only": x.sim_only,
                            "error": x.error,
                        }
                        for a, x in r.results.items()
                    },
                }
                for r in table.rows
            ],
        }
        back = table_from_wire(wire)
        assert emit(back, "csv") == emit(table, "csv")


class TestFigurePresets:
    def test_preset_parameters(self):
        expected = {
            4: (1e6, 2e6, 0.2, False),
            5: (1e6, 2e6, 0.7, False),
            6: (1e6, 2e6, 0.2, True),
            7: (1e6, 2e6, 0.7, True),
            8: (5.5e6, 11e6, 0.2, True),
            9: (5.5e6, 11e6, 0.7, True),
        }
        for fig, (r1, r2, alpha2, overhead) in expected.items():
            spec = figure_preset(fig)
            assert spec.base["rates_bps"] == [r1, r2]
            assert spec.base["alphas"][1] == alpha2
            assert spec.with_overhead == overhead
            assert ("overhead" in spec.base) == overhead
            assert spec.base["s"] == 10 and spec.base["f"] == 2 and spec.base["beta_max"] == 3
            assert spec.base["mean_packet_bits"] == 8000.0
            if overhead:
                assert spec.base["overhead"] == OVERHEAD_80211B
            assert spec.param == "alphas[0]"
            assert spec.grid == alpha1_grid()

    def test_grid_capped_strictly_below_one(self):
        grid = alpha1_grid()
        assert grid[0] == 0.7
        assert grid[-1] == 1.0 - 1e-6
        assert all(b > a for a, b in zip(grid, grid[1:]))
        assert all(g < 1.0 for g in grid)

    def test_unknown_figure_rejected(self):
        with pytest.raises(KeyError):
            figure_preset(3)

    def test_spec_dict_round_trip(self):
        spec = figure_preset(8, with_sim=True, n_packets=1234, seed=9)
        back = sweep_spec_from_dict(sweep_spec_to_dict(spec))
        assert back == spec


def test_mean_packet_bits_flag_flows_into_base():
    spec = figure_preset(4, mean_packet_bits=12000.0)
    assert spec.base["mean_packet_bits"] == 12000.0
    table = run_sweep(SweepSpec(base=spec.base, param=spec.param, grid=(0.9,),
                                algorithms=("arf",)))
    assert math.isfinite(table.rows[0].results["arf"].analytic_tau_bps)
