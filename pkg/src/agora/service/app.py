"""FastAPI application wrapping the simulator and benchmark harness.

The CLI is a thin client of this API; running the server stand-alone gives
the same capabilities over HTTP. All endpoints are synchronous and
deterministic for a given request body (no wall-clock anywhere).
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import vectors as vectors_mod
from ..audit import verify_run
from ..bench import ConfigError, RunConfig, run_bench, run_single_session, write_run
from .schemas import (
    BenchRequest,
    BenchResponse,
    ConfigOverrides,
    HealthResponse,
    SessionRunRequest,
    SessionRunResponse,
    VectorsRequest,
    VectorsResponse,
    VerifyRequest,
    VerifyResponse,
)


def _build_config(raw: dict, overrides: ConfigOverrides) -> RunConfig:
    merged = dict(raw)
    for key in ("seed", "mode", "workload", "trials", "concurrency", "duration_s"):
        value = getattr(overrides, key)
        if value is not None:
            merged[key] = value
    if overrides.block_time_ms is not None:
        merged.setdefault("ledger", {})
        merged["ledger"] = {**merged["ledger"], "block_time_ms": overrides.block_time_ms}
    try:
        return RunConfig.from_dict(merged)
    except ConfigError as err:
        raise HTTPException(status_code=400, detail=str(err)) from None


def create_app() -> FastAPI:
    app = FastAPI(title="agora", version="0.1.0")

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse()

    @app.post("/v1/sessions", response_model=SessionRunResponse)
    def run_session_endpoint(body: SessionRunRequest) -> SessionRunResponse:
        cfg = _build_config(body.config, body.overrides)
        result = run_single_session(cfg)
        if body.out_dir:
            write_run(result, body.out_dir, audit_log=body.audit_log)
        transcript = result.worlds[0].transcripts[0]
        return SessionRunResponse(
            final_state=transcript.final_state.value,
            failure_reason=transcript.failure_reason,
            gas_total=transcript.gas_total(),
            phase_timings=transcript.timings.to_dict(cfg.attribution),
            report=result.report,
        )

    @app.post("/v1/bench", response_model=BenchResponse)
    def bench_endpoint(body: BenchRequest) -> BenchResponse:
        cfg = _build_config(body.config, body.overrides)
        sections = (
            ["cost", "latency", "throughput"] if body.section == "all" else [body.section]
        )
        try:
            result = run_bench(cfg, sections)
        except ConfigError as err:
            raise HTTPException(status_code=400, detail=str(err)) from None
        if body.out_dir:
            write_run(result, body.out_dir, audit_log=body.audit_log)
        return BenchResponse(report=result.report, out_dir=body.out_dir)

    @app.post("/v1/verify", response_model=VerifyResponse)
    def verify_endpoint(body: VerifyRequest) -> VerifyResponse:
        report = verify_run(body.run_dir)
        return VerifyResponse(
            ok=report.ok,
            sessions_checked=report.sessions_checked,
            findings=[f.to_dict() for f in report.findings],
        )

    @app.post("/v1/vectors", response_model=VectorsResponse)
    def vectors_endpoint(body: VectorsRequest) -> VectorsResponse:
        if body.action == "emit":
            try:
                vectors_mod.emit(body.path)
            except OSError as err:
                raise HTTPException(status_code=400, detail=str(err)) from None
            return VectorsResponse(ok=True, mismatches=[])
        mismatches = vectors_mod.check(body.path)
        return VectorsResponse(ok=not mismatches, mismatches=mismatches)

    return app
