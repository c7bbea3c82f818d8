"""HTTP facade over the analytic and simulation pipelines.

Everything heavy lives in the core package; this module only converts
between wire models and core types.  The CLI is a thin client of this API.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..aarf import aarf_throughput, paarf_throughput
from ..arf import ThroughputReport, arf_throughput
from ..model import (
    Algorithm,
    Scenario,
    ScenarioValidationError,
    scenario_from_dict,
    validate,
    validation_errors,
)
from ..overhead import arf_mac_throughput
from ..sim import SimConfig, SimResult, simulate
from ..sweeps import (
    SweepTable,
    figure_preset,
    run_sweep,
    sweep_spec_from_dict,
    sweep_spec_to_dict,
)
from .schemas import (
    AlgoResultModel,
    AnalyzeResponse,
    FigureRunRequest,
    HealthResponse,
    ScenarioModel,
    SimulateRequest,
    SimulateResponse,
    StateShareModel,
    StateStatsModel,
    SweepRequest,
    SweepResponse,
    SweepRowModel,
    ValidateResponse,
    ValidationIssue,
)


def _to_scenario(model: ScenarioModel) -> Scenario:
    try:
        return validate(scenario_from_dict(model.as_dict()))
    except ScenarioValidationError as exc:
        raise HTTPException(
            status_code=422,
            detail=[{"code": e.code.value, "message": e.message} for e in exc.errors],
        ) from exc


def _analyze(scenario: Scenario) -> ThroughputReport:
    if scenario.overhead is not None:
        if scenario.algorithm is not Algorithm.ARF:
            raise HTTPException(
                status_code=400,
                detail=f"{scenario.algorithm.value} has no closed form with MAC overhead; "
                "POST /simulate instead",
            )
        return arf_mac_throughput(scenario)
    if scenario.algorithm is Algorithm.ARF:
        return arf_throughput(scenario)
    if scenario.algorithm is Algorithm.AARF:
        return aarf_throughput(scenario)
    return paarf_throughput(scenario)


def _report_response(report: ThroughputReport) -> AnalyzeResponse:
    return AnalyzeResponse(
        algorithm=report.algorithm,
        with_overhead=report.with_overhead,
        rates_bps=list(report.rates_bps),
        time_fractions=list(report.time_fractions),
        tau_bps=report.tau_bps,
        states=[
            StateShareModel(label=s.label, pi=s.pi, mu_s=s.mu_s, time_fraction=s.time_fraction)
            for s in report.states
        ],
    )


def _sim_response(result: SimResult) -> SimulateResponse:
    return SimulateResponse(
        throughput_est_bps=result.throughput_est_bps,
        throughput_stderr_bps=result.throughput_stderr_bps,
        time_fraction_est=list(result.time_fraction_est),
        tx_time_fraction_est=list(result.tx_time_fraction_est),
        tx_time_fraction_stderr=list(result.tx_time_fraction_stderr),
        total_sim_time_s=result.total_sim_time_s,
        delivered_bits=result.delivered_bits,
        n_packets=result.n_packets,
        seed=result.seed,
        transition_counts={f"{a}->{b}": c for (a, b), c in result.transition_counts.items()},
        state_stats={
            k: StateStatsModel(
                entries=v.entries,
                mean_sojourn_s=v.mean_sojourn_s,
                sojourn_stderr_s=v.sojourn_stderr_s,
                mean_tx_per_visit=v.mean_tx_per_visit,
                max_tx_per_visit=v.max_tx_per_visit,
                min_tx_before_probe=v.min_tx_before_probe,
            )
            for k, v in result.state_stats.items()
        },
    )


def _table_response(table: SweepTable) -> SweepResponse:
    return SweepResponse(
        param=table.param,
        algorithms=list(table.algorithms),
        n_rates=table.n_rates,
        with_sim=table.with_sim,
        with_overhead=table.with_overhead,
        sim_only_algorithms=list(table.sim_only_algorithms),
        complete=table.complete,
        rows=[
            SweepRowModel(
                param_value=row.param_value,
                results={
                    algo: AlgoResultModel(
                        analytic_tau_bps=r.analytic_tau_bps,
                        sim_tau_bps=r.sim_tau_bps,
                        sim_stderr_bps=r.sim_stderr_bps,
                        time_fractions=list(r.time_fractions) if r.time_fractions else None,
                        sim_only=r.sim_only,
                        error=r.error,
                    )
                    for algo, r in row.results.items()
                },
            )
            for row in table.rows
        ],
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="ratekit",
        version=__version__,
        description="Steady-state throughput of ARF/AARF/PAARF rate adaptation: "
        "exact analysis plus a packet-level Monte Carlo cross-check.",
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/validate", response_model=ValidateResponse)
    def validate_scenario(scenario: ScenarioModel) -> ValidateResponse:
        try:
            errs = validation_errors(scenario_from_dict(scenario.as_dict()))
        except ScenarioValidationError as exc:
            errs = exc.errors
        return ValidateResponse(
            valid=not errs,
            errors=[ValidationIssue(code=e.code.value, message=e.message) for e in errs],
        )

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze(scenario: ScenarioModel) -> AnalyzeResponse:
        return _report_response(_analyze(_to_scenario(scenario)))

    @app.post("/simulate", response_model=SimulateResponse)
    def run_simulation(request: SimulateRequest) -> SimulateResponse:
        scenario = _to_scenario(request.scenario)
        try:
            config = SimConfig(
                scenario=scenario,
                n_packets=request.n_packets,
                seed=request.seed,
                warmup_packets=request.warmup_packets,
            )
            return _sim_response(simulate(config))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(request: SweepRequest) -> SweepResponse:
        spec = sweep_spec_from_dict(
            {
                "base": request.base.as_dict(),
                "param": request.param,
                "grid": request.grid,
                "algorithms": request.algorithms,
                "with_sim": request.with_sim,
                "with_overhead": request.with_overhead,
                "n_packets": request.n_packets,
                "seed": request.seed,
            }
        )
        try:
            return _table_response(run_sweep(spec))
        except (KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.get("/figures/{fig}", response_model=SweepRequest)
    def figure_spec(fig: int) -> SweepRequest:
        try:
            spec = figure_preset(fig)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return SweepRequest(**sweep_spec_to_dict(spec))

    @app.post("/figures/{fig}/run", response_model=SweepResponse)
    def figure_run(fig: int, request: FigureRunRequest) -> SweepResponse:
        try:
            spec = figure_preset(
                fig,
                mean_packet_bits=request.mean_packet_bits,
                with_sim=request.with_sim,
                n_packets=request.n_packets,
                seed=request.seed,
            )
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return _table_response(run_sweep(spec))

    return app
