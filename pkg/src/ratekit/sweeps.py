"""Parameter sweeps over scenarios: analytic curves, optional simulation
columns, CSV/dat emission and the numbered preset channel regimes
(figures 4-9)."""
from __future__ import annotations

import copy
import csv
import io
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from .aarf import aarf_throughput, paarf_throughput
from .arf import arf_throughput
from .model import Algorithm, Scenario, scenario_from_dict, validate
from .overhead import arf_mac_throughput
from .sim import SimConfig, derive_seed, simulate

ALGORITHMS = ("arf", "aarf", "paarf")

#: 802.11b DCF defaults used by the overhead presets.
OVERHEAD_80211B = {
    "difs_us": 50.0,
    "sifs_us": 10.0,
    "t_ack_us": 112.0,
    "cw_min": 32,
    "cw_max": 1024,
    "gamma_max": 5,
    "slot_us": 20.0,
}

ALPHA1_MAX = 1.0 - 1e-6  # the model needs alpha < 1


def default_threads() -> int:
    env = os.environ.get("RATEKIT_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class SweepSpec:
    base: dict[str, Any]  # scenario JSON dict; "algorithm" is overridden per column
    param: str  # e.g. "alphas[0]" or "overhead.difs_us"
    grid: tuple[float, ...]
    algorithms: tuple[str, ...] = ALGORITHMS
    with_sim: bool = False
    with_overhead: bool = False
    n_packets: int = 1_000_000
    seed: int = 1


@dataclass
class AlgoResult:
    analytic_tau_bps: float | None = None
    sim_tau_bps: float | None = None
    sim_stderr_bps: float | None = None
    time_fractions: tuple[float, ...] | None = None
    sim_only: bool = False  # no closed form for this column (overhead AARF/PAARF)
    error: str | None = None


@dataclass
class SweepRow:
    param_value: float
    results: dict[str, AlgoResult] = field(default_factory=dict)


@dataclass
class SweepTable:
    param: str
    algorithms: tuple[str, ...]
    n_rates: int
    with_sim: bool
    with_overhead: bool
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def sim_only_algorithms(self) -> tuple[str, ...]:
        return tuple(a for a in self.algorithms if self.with_overhead and a != "arf")

    @property
    def complete(self) -> bool:
        return all(r.results[a].error is None for r in self.rows for a in self.algorithms)


def sweep_spec_from_dict(d: dict[str, Any]) -> SweepSpec:
    return SweepSpec(
        base=dict(d["base"]),
        param=str(d["param"]),
        grid=tuple(float(x) for x in d["grid"]),
        algorithms=tuple(d.get("algorithms", ALGORITHMS)),
        with_sim=bool(d.get("with_sim", False)),
        with_overhead=bool(d.get("with_overhead", False)),
        n_packets=int(d.get("n_packets", 1_000_000)),
        seed=int(d.get("seed", 1)),
    )


def sweep_spec_to_dict(spec: SweepSpec) -> dict[str, Any]:
    return {
        "base": spec.base,
        "param": spec.param,
        "grid": list(spec.grid),
        "algorithms": list(spec.algorithms),
        "with_sim": spec.with_sim,
        "with_overhead": spec.with_overhead,
        "n_packets": spec.n_packets,
        "seed": spec.seed,
    }


_PATH_SEGMENT = re.compile(r"^(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?:\[(?P<idx>\d+)\])?$")


def set_param(base: dict[str, Any], path: str, value: float) -> dict[str, Any]:
    """Deep-copied base dict with the dotted/indexed path set to value."""
    out = copy.deepcopy(base)
    node: Any = out
    segments = path.split(".")
    for si, seg in enumerate(segments):
        m = _PATH_SEGMENT.match(seg)
        if not m:
            raise KeyError(f"bad parameter path segment {seg!r}")
        name, idx = m.group("name"), m.group("idx")
        last = si == len(segments) - 1
        if name not in node:
            raise KeyError(f"parameter path {path!r}: no field {name!r}")
        if idx is None:
            if last:
                node[name] = value
            else:
                node = node[name]
        else:
            seq = node[name]
            k = int(idx)
            if k >= len(seq):
                raise KeyError(f"parameter path {path!r}: index {k} out of range")
            if last:
                seq[k] = value
            else:
                node = seq[k]
    return out


def _scenario_for(spec: SweepSpec, value: float, algorithm: str) -> Scenario:
    d = set_param(spec.base, spec.param, value)
    d["algorithm"] = algorithm
    if not spec.with_overhead:
        d.pop("overhead", None)
    elif "overhead" not in d:
        raise KeyError("with_overhead sweep needs overhead parameters in the base scenario")
    return validate(scenario_from_dict(d))


def _analytic(scenario: Scenario, with_overhead: bool):
    if scenario.algorithm is Algorithm.ARF:
        return arf_mac_throughput(scenario) if with_overhead else arf_throughput(scenario)
    if with_overhead:
        return None  # simulation only; no closed form with MAC overhead
    if scenario.algorithm is Algorithm.AARF:
        return aarf_throughput(scenario)
    return paarf_throughput(scenario)


def _run_point(spec: SweepSpec, point_index: int, value: float) -> SweepRow:
    row = SweepRow(param_value=value)
    for algo_index, algo in enumerate(spec.algorithms):
        res = AlgoResult()
        row.results[algo] = res
        try:
            scenario = _scenario_for(spec, value, algo)
            report = _analytic(scenario, spec.with_overhead)
            if report is None:
                res.sim_only = True
            else:
                res.analytic_tau_bps = report.tau_bps
                res.time_fractions = report.time_fractions
            if spec.with_sim or res.sim_only:
                sim = simulate(
                    SimConfig(
                        scenario,
                        n_packets=spec.n_packets,
                        seed=derive_seed(spec.seed, point_index, algo_index),
                    )
                )
                res.sim_tau_bps = sim.throughput_est_bps
                res.sim_stderr_bps = sim.throughput_stderr_bps
                if res.time_fractions is None:
                    res.time_fractions = sim.tx_time_fraction_est
        except Exception as exc:  # recorded in-row; a sweep never aborts wholesale
            res.error = str(exc)
    return row


def run_sweep(spec: SweepSpec) -> SweepTable:
    """Evaluate every (grid value, algorithm) cell.

    Grid points are independent and run on a thread pool bounded by
    RATEKIT_THREADS; per-point simulation seeds are derived from the spec
    seed and the grid/algorithm indices, so results do not depend on the
    scheduling."""
    n_rates = len(spec.base.get("rates_bps", ()))
    table = SweepTable(
        param=spec.param,
        algorithms=spec.algorithms,
        n_rates=n_rates,
        with_sim=spec.with_sim,
        with_overhead=spec.with_overhead,
    )
    if not spec.algorithms:
        raise ValueError("need at least one algorithm")
    with ThreadPoolExecutor(max_workers=default_threads()) as pool:
        futures = [pool.submit(_run_point, spec, k, v) for k, v in enumerate(spec.grid)]
        table.rows = [f.result() for f in futures]  # grid order, not completion order
    return table


# --- emission ---------------------------------------------------------------

def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def emit_csv(table: SweepTable) -> str:
    """CSV with columns param,algo,analytic_tau_bps,sim_tau_bps,sim_stderr_bps,f_1..f_N.

    Missing values serialize as empty fields.  Simulation-only columns are
    flagged in a comment line above the header."""
    buf = io.StringIO()
    if table.sim_only_algorithms:
        buf.write(f"# simulation-only (no closed form): {','.join(table.sim_only_algorithms)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["param", "algo", "analytic_tau_bps", "sim_tau_bps", "sim_stderr_bps"]
        + [f"f_{i + 1}" for i in range(table.n_rates)]
    )
    for row in table.rows:
        for algo in table.algorithms:
            r = row.results[algo]
            fracs = r.time_fractions or tuple(None for _ in range(table.n_rates))
            writer.writerow(
                [repr(float(row.param_value)), algo, _fmt(r.analytic_tau_bps),
                 _fmt(r.sim_tau_bps), _fmt(r.sim_stderr_bps)]
                + [_fmt(x) for x in fracs]
            )
    return buf.getvalue()


def emit_dat(table: SweepTable) -> str:
    """Plot-friendly variant: one block per algorithm, blank-line separated."""
    lines: list[str] = []
    for algo in table.algorithms:
        sim_only = algo in table.sim_only_algorithms
        lines.append(f"# algo: {algo}" + (" (simulation only)" if sim_only else ""))
        lines.append(
            "# param analytic_tau_bps sim_tau_bps sim_stderr_bps "
            + " ".join(f"f_{i + 1}" for i in range(table.n_rates))
        )
        for row in table.rows:
            r = row.results[algo]
            if r.error is not None:
                lines.append(f"# error @ {row.param_value!r}: {r.error}")
                continue
            fracs = r.time_fractions or tuple(None for _ in range(table.n_rates))
            cells = [repr(float(row.param_value)), _fmt(r.analytic_tau_bps) or "nan",
                     _fmt(r.sim_tau_bps) or "nan", _fmt(r.sim_stderr_bps) or "nan"]
            cells += [_fmt(x) or "nan" for x in fracs]
            lines.append(" ".join(cells))
        lines.append("")
    return "\n".join(lines)


def emit(table: SweepTable, fmt: str = "csv") -> str:
    if fmt == "csv":
        return emit_csv(table)
    if fmt == "dat":
        return emit_dat(table)
    raise ValueError(f"unknown format {fmt!r}")


def parse_csv(text: str) -> SweepTable:
    """Inverse of emit_csv (comment lines are skipped)."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    header = rows[0]
    n_rates = len([c for c in header if c.startswith("f_")])
    by_value: dict[float, SweepRow] = {}
    algorithms: list[str] = []
    for cells in rows[1:]:
        value = float(cells[0])
        algo = cells[1]
        if algo not in algorithms:
            algorithms.append(algo)
        row = by_value.setdefault(value, SweepRow(param_value=value))
        fracs = [cells[5 + i] for i in range(n_rates)]
        row.results[algo] = AlgoResult(
            analytic_tau_bps=float(cells[2]) if cells[2] else None,
            sim_tau_bps=float(cells[3]) if cells[3] else None,
            sim_stderr_bps=float(cells[4]) if cells[4] else None,
            time_fractions=tuple(float(x) for x in fracs) if all(fracs) else None,
        )
    table = SweepTable(
        param="param",
        algorithms=tuple(algorithms),
        n_rates=n_rates,
        with_sim=any(r.sim_tau_bps is not None for row in by_value.values() for r in row.results.values()),
        with_overhead=False,
        rows=[by_value[v] for v in by_value],
    )
    return table


def table_from_wire(d: dict[str, Any]) -> SweepTable:
    """Rebuild a SweepTable from the HTTP service's sweep response payload."""
    table = SweepTable(
        param=d["param"],
        algorithms=tuple(d["algorithms"]),
        n_rates=int(d["n_rates"]),
        with_sim=bool(d["with_sim"]),
        with_overhead=bool(d["with_overhead"]),
    )
    for row_d in d["rows"]:
        row = SweepRow(param_value=float(row_d["param_value"]))
        for algo, r in row_d["results"].items():
            fracs = r.get("time_fractions")
            row.results[algo] = AlgoResult(
                analytic_tau_bps=r.get("analytic_tau_bps"),
                sim_tau_bps=r.get("sim_tau_bps"),
                sim_stderr_bps=r.get("sim_stderr_bps"),
                time_fractions=tuple(fracs) if fracs else None,
                sim_only=bool(r.get("sim_only", False)),
                error=r.get("error"),
            )
        table.rows.append(row)
    return table


# --- figure presets ----------------------------------------------------------

#: (R1, R2, alpha2, overhead on) per preset figure.
FIGURE_SETTINGS: dict[int, tuple[float, float, float, bool]] = {
    4: (1e6, 2e6, 0.2, False),
    5: (1e6, 2e6, 0.7, False),
    6: (1e6, 2e6, 0.2, True),
    7: (1e6, 2e6, 0.7, True),
    8: (5.5e6, 11e6, 0.2, True),
    9: (5.5e6, 11e6, 0.7, True),
}

DEFAULT_MEAN_PACKET_BITS = 8000.0  # 1000-byte packets


def alpha1_grid() -> tuple[float, ...]:
    """alpha_1 from 0.70 to 0.98 in steps of 0.02, capped below 1."""
    return tuple(round(0.70 + 0.02 * k, 2) for k in range(15)) + (ALPHA1_MAX,)


def figure_preset(
    fig: int,
    mean_packet_bits: float = DEFAULT_MEAN_PACKET_BITS,
    with_sim: bool = False,
    n_packets: int = 1_000_000,
    seed: int = 1,
) -> SweepSpec:
    """Sweep spec for one of the numbered preset channel regimes.

    Shared settings: s=10, f=2, beta_max=3; overhead figures add the 802.11b
    DCF parameters.  Overhead AARF/PAARF columns are simulation-only."""
    if fig not in FIGURE_SETTINGS:
        raise KeyError(f"unknown figure {fig}; presets cover 4-9")
    r1, r2, alpha2, with_overhead = FIGURE_SETTINGS[fig]
    base: dict[str, Any] = {
        "rates_bps": [r1, r2],
        "alphas": [0.9, alpha2],  # alphas[0] is swept
        "mean_packet_bits": mean_packet_bits,
        "algorithm": "arf",
        "s": 10,
        "f": 2,
        "beta_max": 3,
    }
    if with_overhead:
        base["overhead"] = dict(OVERHEAD_80211B)
    return SweepSpec(
        base=base,
        param="alphas[0]",
        grid=alpha1_grid(),
        algorithms=ALGORITHMS,
        with_sim=with_sim,
        with_overhead=with_overhead,
        n_packets=n_packets,
        seed=seed,
    )
