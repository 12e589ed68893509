"""Request/response models for the HTTP API."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

BenchSection = Literal["cost", "latency", "throughput", "all"]


class ConfigOverrides(BaseModel):
    """CLI-style overrides layered on top of the config file."""

    seed: int | None = None
    mode: Literal["agentosi", "web3-baseline"] | None = None
    workload: Literal["light", "pipeline", "genai"] | None = None
    trials: int | None = Field(default=None, ge=1)
    concurrency: int | None = Field(default=None, ge=1)
    duration_s: int | None = Field(default=None, ge=1)
    block_time_ms: int | None = Field(default=None, ge=1)


class SessionRunRequest(BaseModel):
    config: dict[str, Any] = Field(default_factory=dict)
    overrides: ConfigOverrides = Field(default_factory=ConfigOverrides)
    out_dir: str | None = None
    audit_log: bool = False


class SessionRunResponse(BaseModel):
    final_state: str
    failure_reason: str | None
    gas_total: int
    phase_timings: dict[str, int]
    report: dict[str, Any]


class BenchRequest(BaseModel):
    section: BenchSection = "all"
    config: dict[str, Any] = Field(default_factory=dict)
    overrides: ConfigOverrides = Field(default_factory=ConfigOverrides)
    out_dir: str | None = None
    audit_log: bool = False


class BenchResponse(BaseModel):
    report: dict[str, Any]
    out_dir: str | None


class VerifyRequest(BaseModel):
    run_dir: str


class VerifyResponse(BaseModel):
    ok: bool
    sessions_checked: int
    findings: list[dict[str, str]]


class VectorsRequest(BaseModel):
    action: Literal["emit", "check"]
    path: str


class VectorsResponse(BaseModel):
    ok: bool
    mismatches: list[str]


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"
