"""Benchmark harness: cost, latency, and throughput experiments.

Every experiment runs inside the deterministic event simulation, so a given
seed and configuration always produce byte-identical reports. Three
sections mirror the evaluation workflow:

* ``cost`` — gas per protocol action and per session, for the escrow-only
  mode and the anchored baseline, plus the relative on-chain cost reduction.
* ``latency`` — sequential sessions per workload; nearest-rank median /
  p10 / p90 for each phase (messaging, payment confirmation,
  execution + delivery) and each phase's share of the total.
* ``throughput`` — concurrent user agents looping sessions against one
  service for a fixed duration under a ledger inclusion cap; steady-state
  sessions/s, confirmed tx/s, and message rate after a warmup window.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from random import Random

from .canon import canonicalize
from .crypto import sha256
from .envelope import LatencyModel
from .ledger import LedgerConfig, TxKind, DEFAULT_GAS_SCHEDULE
from .session import (
    DEFAULT_QUOTE_TTL_MS,
    DEFAULT_UA_FUNDING,
    Mode,
    SessionTranscript,
    World,
    WorkloadKind,
    WorkloadSpec,
    run_session,
    session_process,
)
from .sim import Scheduler
from .store import Cid

__all__ = [
    "RunConfig",
    "ConfigError",
    "WorldExport",
    "BenchResult",
    "run_bench",
    "run_single_session",
    "write_run",
    "report_bytes",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1

DEFAULT_CONCURRENCY_LEVELS = (10, 50, 100, 250, 500)
DEFAULT_MSG_RATE_CAP = 50.0  # relay messages/s (reported saturation bound)
DEFAULT_TX_RATE_CAP = 40.0  # confirmed tx/s (real per-block inclusion cap)
DEFAULT_WARMUP_FRACTION = 0.2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Complete experiment configuration; every field has a usable default."""

    seed: int = 42
    mode: Mode = Mode.AGENT_OSI
    workload: str = WorkloadKind.LIGHT.value
    trials: int = 100
    concurrency: int | None = None  # None = sweep concurrency_levels
    duration_s: int = 60
    block_time_ms: int = 2000
    gas_schedule: dict[TxKind, int] = field(
        default_factory=lambda: dict(DEFAULT_GAS_SCHEDULE)
    )
    bus_latency_min_ms: int = 5
    bus_latency_max_ms: int = 10
    drop_probability: float = 0.0
    store_upload_base_ms: int = 50
    store_upload_per_mib_ms: int = 20
    workload_overrides: dict[str, dict] = field(default_factory=dict)
    msg_rate_cap: float = DEFAULT_MSG_RATE_CAP
    tx_rate_cap: float = DEFAULT_TX_RATE_CAP
    concurrency_levels: tuple[int, ...] = DEFAULT_CONCURRENCY_LEVELS
    warmup_fraction: float = DEFAULT_WARMUP_FRACTION
    throughput_workload: str = WorkloadKind.LIGHT.value
    attribution: str = "serial"
    quote_ttl_ms: int = DEFAULT_QUOTE_TTL_MS
    ua_funding: int = DEFAULT_UA_FUNDING

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.duration_s < 1:
            raise ConfigError("duration_s must be >= 1")
        if self.block_time_ms < 1:
            raise ConfigError("block_time_ms must be >= 1")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError("warmup_fraction must be in [0, 1)")
        if self.attribution not in ("serial", "overlapped"):
            raise ConfigError("attribution must be 'serial' or 'overlapped'")
        if self.concurrency is not None and self.concurrency < 1:
            raise ConfigError("concurrency must be >= 1")
        try:
            WorkloadKind(self.workload)
            WorkloadKind(self.throughput_workload)
        except ValueError as err:
            raise ConfigError(str(err)) from None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        """Parse the on-disk config shape (sectioned JSON) with defaults."""
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known_sections = {"ledger", "bus", "store", "workloads", "caps", "gas_schedule"}
        known_scalars = {
            "seed", "mode", "workload", "trials", "concurrency", "duration_s",
            "attribution", "quote_ttl_ms", "ua_funding",
        }
        unknown = set(raw) - known_sections - known_scalars
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        ledger = raw.get("ledger", {})
        bus = raw.get("bus", {})
        store = raw.get("store", {})
        caps = raw.get("caps", {})
        gas_raw = raw.get("gas_schedule", {})
        gas = dict(DEFAULT_GAS_SCHEDULE)
        for key, value in gas_raw.items():
            try:
                gas[TxKind(key)] = int(value)
            except ValueError:
                raise ConfigError(f"unknown gas schedule key: {key}") from None
        try:
            mode = Mode(raw.get("mode", Mode.AGENT_OSI.value))
        except ValueError as err:
            raise ConfigError(str(err)) from None
        try:
            return cls(
                seed=int(raw.get("seed", 42)),
                mode=mode,
                workload=raw.get("workload", WorkloadKind.LIGHT.value),
                trials=int(raw.get("trials", 100)),
                concurrency=(
                    int(raw["concurrency"]) if raw.get("concurrency") is not None else None
                ),
                duration_s=int(raw.get("duration_s", 60)),
                block_time_ms=int(ledger.get("block_time_ms", 2000)),
                gas_schedule=gas,
                bus_latency_min_ms=int(bus.get("latency_min_ms", 5)),
                bus_latency_max_ms=int(bus.get("latency_max_ms", 10)),
                drop_probability=float(bus.get("drop_probability", 0.0)),
                store_upload_base_ms=int(store.get("upload_base_ms", 50)),
                store_upload_per_mib_ms=int(store.get("upload_per_mib_ms", 20)),
                workload_overrides={
                    str(k): dict(v) for k, v in raw.get("workloads", {}).items()
                },
                msg_rate_cap=float(caps.get("msg_per_s", DEFAULT_MSG_RATE_CAP)),
                tx_rate_cap=float(caps.get("tx_per_s", DEFAULT_TX_RATE_CAP)),
                concurrency_levels=tuple(
                    int(c) for c in caps.get("concurrency_levels", DEFAULT_CONCURRENCY_LEVELS)
                ),
                warmup_fraction=float(caps.get("warmup_fraction", DEFAULT_WARMUP_FRACTION)),
                throughput_workload=caps.get(
                    "throughput_workload", WorkloadKind.LIGHT.value
                ),
                attribution=raw.get("attribution", "serial"),
                quote_ttl_ms=int(raw.get("quote_ttl_ms", DEFAULT_QUOTE_TTL_MS)),
                ua_funding=int(raw.get("ua_funding", DEFAULT_UA_FUNDING)),
            )
        except (TypeError, ValueError) as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError(str(err)) from None

    def to_dict(self) -> dict:
        """Sectioned form, embedded verbatim in the report."""
        return {
            "seed": self.seed,
            "mode": self.mode.value,
            "workload": self.workload,
            "trials": self.trials,
            "concurrency": self.concurrency,
            "duration_s": self.duration_s,
            "attribution": self.attribution,
            "quote_ttl_ms": self.quote_ttl_ms,
            "ua_funding": self.ua_funding,
            "ledger": {"block_time_ms": self.block_time_ms},
            "gas_schedule": {k.value: v for k, v in self.gas_schedule.items()},
            "bus": {
                "latency_min_ms": self.bus_latency_min_ms,
                "latency_max_ms": self.bus_latency_max_ms,
                "drop_probability": self.drop_probability,
            },
            "store": {
                "upload_base_ms": self.store_upload_base_ms,
                "upload_per_mib_ms": self.store_upload_per_mib_ms,
            },
            "workloads": self.workload_overrides,
            "caps": {
                "msg_per_s": self.msg_rate_cap,
                "tx_per_s": self.tx_rate_cap,
                "concurrency_levels": list(self.concurrency_levels),
                "warmup_fraction": self.warmup_fraction,
                "throughput_workload": self.throughput_workload,
            },
        }

    def workload_spec(self, kind: str | WorkloadKind) -> WorkloadSpec:
        kind = WorkloadKind(kind)
        return WorkloadSpec.create(kind, self.workload_overrides.get(kind.value))


def _derive_seed(seed: int, label: str) -> int:
    return int.from_bytes(sha256(f"{seed}|{label}".encode())[:8], "big")


def _make_world(cfg: RunConfig, label: str, tx_cap: float | None = None) -> World:
    return World.create(
        seed=_derive_seed(cfg.seed, label),
        ledger_config=LedgerConfig(
            block_time_ms=cfg.block_time_ms,
            gas_schedule=dict(cfg.gas_schedule),
            tx_rate_cap=tx_cap,
        ),
        bus_latency=LatencyModel(cfg.bus_latency_min_ms, cfg.bus_latency_max_ms),
        store_kwargs={
            "upload_base_ms": cfg.store_upload_base_ms,
            "upload_per_mib_ms": cfg.store_upload_per_mib_ms,
        },
        drop_probability=cfg.drop_probability,
    )


@dataclass
class WorldExport:
    """One simulation universe's exportable evidence."""

    label: str
    world: World
    transcripts: list[SessionTranscript]
    write_artifacts: bool = True  # throughput worlds are hashed, not dumped

    def identities(self) -> dict[str, str]:
        out: dict[str, str] = {}
        for agent in self.agents:
            out[agent.identity.address.hex()] = agent.identity.public_key.hex()
        return out

    def __post_init__(self) -> None:
        self.agents: list = []
        self.manifests: list = []


@dataclass
class BenchResult:
    config: RunConfig
    report: dict
    worlds: list[WorldExport]


def _percentile(sorted_vals, pct: int):
    """Nearest-rank percentile on a pre-sorted list."""
    n = len(sorted_vals)
    rank = max(1, min(n, -(-pct * n // 100)))  # ceil(pct*n/100), clamped
    return sorted_vals[int(rank) - 1]


def _summary(values: list) -> dict:
    vals = sorted(values)
    return {
        "median": _percentile(vals, 50),
        "p10": _percentile(vals, 10),
        "p90": _percentile(vals, 90),
    }


# --- cost --------------------------------------------------------------------


def _bench_cost(cfg: RunConfig) -> tuple[dict, list[WorldExport]]:
    exports: list[WorldExport] = []
    per_mode: dict[str, dict] = {}
    register_gas = cfg.gas_schedule[TxKind.REGISTER_IDENTITY]
    for mode in (Mode.AGENT_OSI, Mode.WEB3_BASELINE):
        world = _make_world(cfg, f"cost:{mode.value}")
        spec = cfg.workload_spec(cfg.workload)
        ua = world.new_user_agent("cost", funding=cfg.ua_funding, bootstrap=False)
        sa = world.new_service_agent(
            "cost", spec, quote_ttl_ms=cfg.quote_ttl_ms, bootstrap=False
        )
        # On-chain identity registration is part of the measured lifecycle.
        register_receipts = [
            world.ledger.register_identity(ua.identity, 0),
            world.ledger.register_identity(sa.identity, 0),
        ]
        start = 2 * cfg.block_time_ms  # after both registrations confirm
        transcript = run_session(
            world, ua, sa, spec, mode, now_ms=start, attribution=cfg.attribution
        )
        if not transcript.settled:
            raise RuntimeError(
                f"cost probe session failed: {transcript.failure_reason}"
            )
        export = WorldExport(f"cost-{mode.value}", world, [transcript])
        export.agents = [ua, sa]
        export.manifests = [sa.manifest]
        exports.append(export)
        per_mode[mode.value] = {
            "registerGas": sum(r.gas_used for r in register_receipts) // 2,
            "sessionGas": transcript.gas_total(),
            "txKinds": {r.kind.value: r.gas_used for r in transcript.gas_receipts},
        }
    osi = per_mode[Mode.AGENT_OSI.value]["sessionGas"]
    base = per_mode[Mode.WEB3_BASELINE.value]["sessionGas"]
    section = {
        "registerGas": register_gas,
        "agentosiSessionGas": osi,
        "baselineSessionGas": base,
        "web2SessionGas": 0,  # no settlement chain at all; nothing verifiable
        "reductionPercent": round(100.0 * (base - osi) / base, 4),
        "perMode": per_mode,
    }
    return section, exports


# --- latency -----------------------------------------------------------------

_COMPONENTS = ("messagingMs", "confirmationMs", "executionDeliveryMs", "totalMs")


def _bench_latency(cfg: RunConfig) -> tuple[dict, list[WorldExport]]:
    exports: list[WorldExport] = []
    section: dict[str, dict] = {}
    for kind in WorkloadKind:
        spec = cfg.workload_spec(kind)
        world = _make_world(cfg, f"latency:{kind.value}")
        ua = world.new_user_agent("latency", funding=max(cfg.ua_funding, 10**12))
        sa = world.new_service_agent("latency", spec, quote_ttl_ms=cfg.quote_ttl_ms)
        rng = Random(_derive_seed(cfg.seed, f"latency-offsets:{kind.value}"))
        transcripts: list[SessionTranscript] = []
        cursor = 0
        for _ in range(cfg.trials):
            # Random in-block start offset decorrelates lock/confirmation waits.
            start = cursor + rng.randint(0, cfg.block_time_ms - 1)
            t = run_session(
                world, ua, sa, spec, cfg.mode, now_ms=start, attribution=cfg.attribution
            )
            transcripts.append(t)
            cursor = t.end_ms
        export = WorldExport(f"latency-{kind.value}", world, transcripts)
        export.agents = [ua, sa]
        export.manifests = [sa.manifest]
        exports.append(export)

        settled = [t for t in transcripts if t.settled]
        per_component = {
            name: _summary([t.timings.to_dict(cfg.attribution)[name] for t in settled])
            for name in _COMPONENTS
        }
        shares = {}
        for label, name in (
            ("messaging", "messagingMs"),
            ("confirmation", "confirmationMs"),
            ("executionDelivery", "executionDeliveryMs"),
        ):
            ratios = [
                t.timings.to_dict(cfg.attribution)[name]
                / t.timings.to_dict(cfg.attribution)["totalMs"]
                for t in settled
            ]
            shares[label] = {k: round(v, 4) for k, v in _summary(ratios).items()}
        section[kind.value] = {
            "trials": cfg.trials,
            "settled": len(settled),
            "components": per_component,
            "shares": shares,
        }
    return section, exports


# --- throughput ----------------------------------------------------------------


def _ua_loop(world, ua, sa, spec, mode, sink, duration_ms, attribution):
    """Closed loop: back-to-back sessions until the horizon."""
    t = yield
    while t < duration_ms:
        sub = session_process(world, ua, sa, spec, mode, sink, attribution)
        next(sub)
        try:
            resume = sub.send(t)
            while True:
                t = yield resume
                resume = sub.send(t)
        except StopIteration:
            pass


def _bench_throughput(cfg: RunConfig) -> tuple[dict, list[WorldExport]]:
    exports: list[WorldExport] = []
    duration_ms = cfg.duration_s * 1000
    warmup_ms = int(duration_ms * cfg.warmup_fraction)
    window_s = (duration_ms - warmup_ms) / 1000.0
    levels = (
        [cfg.concurrency] if cfg.concurrency is not None else list(cfg.concurrency_levels)
    )
    spec_kind = cfg.throughput_workload
    rows = []
    for level in levels:
        spec = cfg.workload_spec(spec_kind)
        world = _make_world(cfg, f"throughput:{level}", tx_cap=cfg.tx_rate_cap)
        sa = world.new_service_agent("throughput", spec, quote_ttl_ms=cfg.quote_ttl_ms)
        stagger_rng = Random(_derive_seed(cfg.seed, f"throughput-stagger:{level}"))
        scheduler = Scheduler()
        sink: list[SessionTranscript] = []
        uas = []
        # Stagger loop starts across the warmup period. A simultaneous start
        # makes the closed loops complete in synchronized waves at high
        # concurrency, which aliases with the measurement window; spreading
        # the starts reaches a mixed steady state before measurement begins.
        stagger_span = max(cfg.block_time_ms, warmup_ms)
        for i in range(level):
            ua = world.new_user_agent(f"tp-{i}", funding=max(cfg.ua_funding, 10**12))
            uas.append(ua)
            scheduler.spawn(
                _ua_loop(world, ua, sa, spec, cfg.mode, sink, duration_ms, cfg.attribution),
                stagger_rng.randint(0, stagger_span - 1),
            )
        scheduler.run(until_ms=duration_ms)
        world.ledger.advance_to(duration_ms)

        bt = cfg.block_time_ms
        tx_confirmed = sum(
            1
            for r in world.ledger.receipts.values()
            if r.success and warmup_ms < r.block_number * bt <= duration_ms
        )
        settled = [
            t for t in sink if t.settled and warmup_ms < t.end_ms <= duration_ms
        ]
        offered_msgs = sum(1 for ts in world.bus.sent_log if warmup_ms < ts <= duration_ms)
        offered_rate = offered_msgs / window_s
        rows.append(
            {
                "concurrency": level,
                "txPerS": round(tx_confirmed / window_s, 4),
                "sessionsPerS": round(len(settled) / window_s, 4),
                "msgPerSOffered": round(offered_rate, 4),
                # The relay saturates at its rated capacity; throughput above
                # the cap is reported as the cap (saturation bound).
                "msgPerS": round(min(offered_rate, cfg.msg_rate_cap), 4),
                "settledSessions": len(settled),
                "attemptedSessions": len(sink),
            }
        )
        export = WorldExport(f"throughput-{level}", world, sink, write_artifacts=False)
        export.agents = [sa, *uas]
        export.manifests = [sa.manifest]
        exports.append(export)
    section = {
        "workload": spec_kind,
        "durationS": cfg.duration_s,
        "warmupS": warmup_ms / 1000.0,
        "msgRateCap": cfg.msg_rate_cap,
        "txRateCap": cfg.tx_rate_cap,
        "levels": rows,
    }
    return section, exports


# --- orchestration -------------------------------------------------------------


def _transcript_set_hash(worlds: list[WorldExport]) -> str:
    acc = b""
    for export in worlds:
        for transcript in export.transcripts:
            acc += sha256(canonicalize(transcript.to_dict()))
    return sha256(acc).hex()


def run_bench(cfg: RunConfig, sections: list[str]) -> BenchResult:
    """Run the requested benchmark sections and assemble the report."""
    valid = {"cost", "latency", "throughput"}
    bad = set(sections) - valid
    if bad:
        raise ConfigError(f"unknown bench sections: {sorted(bad)}")
    worlds: list[WorldExport] = []
    report_sections: dict[str, dict] = {}
    if "cost" in sections:
        section, exports = _bench_cost(cfg)
        report_sections["cost"] = section
        worlds.extend(exports)
    if "latency" in sections:
        section, exports = _bench_latency(cfg)
        report_sections["latency"] = section
        worlds.extend(exports)
    if "throughput" in sections:
        section, exports = _bench_throughput(cfg)
        report_sections["throughput"] = section
        worlds.extend(exports)
    report = {
        "schemaVersion": SCHEMA_VERSION,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "sections": report_sections,
        "transcriptSetHash": _transcript_set_hash(worlds),
    }
    return BenchResult(config=cfg, report=report, worlds=worlds)


def run_single_session(cfg: RunConfig) -> BenchResult:
    """One session with the configured mode/workload; reports its transcript."""
    spec = cfg.workload_spec(cfg.workload)
    world = _make_world(cfg, f"session:{cfg.mode.value}:{cfg.workload}")
    ua = world.new_user_agent("session", funding=cfg.ua_funding)
    sa = world.new_service_agent("session", spec, quote_ttl_ms=cfg.quote_ttl_ms)
    transcript = run_session(
        world, ua, sa, spec, cfg.mode, now_ms=0, attribution=cfg.attribution
    )
    export = WorldExport("session", world, [transcript])
    export.agents = [ua, sa]
    export.manifests = [sa.manifest]
    report = {
        "schemaVersion": SCHEMA_VERSION,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "sections": {"session": transcript.to_dict()},
        "transcriptSetHash": _transcript_set_hash([export]),
    }
    return BenchResult(config=cfg, report=report, worlds=[export])


# --- persistence ---------------------------------------------------------------


def report_bytes(report: dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _cost_csv(section: dict) -> bytes:
    rows = [
        ["register", section["registerGas"]],
        ["agentosi_session", section["agentosiSessionGas"]],
        ["baseline_session", section["baselineSessionGas"]],
        ["web2_session", section["web2SessionGas"]],
    ]
    return _csv_bytes(["action", "gas"], rows)


def _latency_csv(section: dict) -> bytes:
    rows = []
    for workload, data in section.items():
        for component, stats in data["components"].items():
            rows.append(
                [workload, component, stats["median"], stats["p10"], stats["p90"]]
            )
    return _csv_bytes(["workload", "component", "median_ms", "p10_ms", "p90_ms"], rows)


def _throughput_csv(section: dict) -> bytes:
    rows = [
        [r["concurrency"], r["msgPerS"], r["txPerS"], r["sessionsPerS"]]
        for r in section["levels"]
    ]
    return _csv_bytes(["concurrency", "msg_per_s", "tx_per_s", "sessions_per_s"], rows)


def _delivered_bytes(export: WorldExport, transcript: SessionTranscript) -> bytes | None:
    if transcript.inline_result is not None:
        return canonicalize(transcript.inline_result)
    if transcript.output_cid:
        digest = Cid.parse(transcript.output_cid).digest
        return export.world.store._blobs.get(digest)
    return None


def write_run(result: BenchResult, out_dir: str, audit_log: bool = False) -> None:
    """Persist the report, CSVs, and per-world evidence directories."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "wb") as fh:
        fh.write(report_bytes(result.report))
    sections = result.report["sections"]
    if "cost" in sections:
        with open(os.path.join(out_dir, "cost.csv"), "wb") as fh:
            fh.write(_cost_csv(sections["cost"]))
    if "latency" in sections:
        with open(os.path.join(out_dir, "latency.csv"), "wb") as fh:
            fh.write(_latency_csv(sections["latency"]))
    if "throughput" in sections:
        with open(os.path.join(out_dir, "throughput.csv"), "wb") as fh:
            fh.write(_throughput_csv(sections["throughput"]))
    for export in result.worlds:
        _write_world(os.path.join(out_dir, "runs", export.label), export, audit_log)


def _dump_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_world(root: str, export: WorldExport, audit_log: bool) -> None:
    os.makedirs(root, exist_ok=True)
    world = export.world
    _dump_json(
        os.path.join(root, "meta.json"),
        {
            "label": export.label,
            "blockTimeMs": world.ledger.config.block_time_ms,
            "worldSeed": world.seed,
        },
    )
    _dump_json(os.path.join(root, "identities.json"), export.identities())
    _dump_json(os.path.join(root, "manifests.json"), [m.to_dict() for m in export.manifests])
    with open(os.path.join(root, "ledger_events.jsonl"), "w", encoding="utf-8") as fh:
        for record in world.ledger.export_log():
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    if audit_log:
        with open(os.path.join(root, "audit.jsonl"), "w", encoding="utf-8") as fh:
            for record in world.bus.audit_log:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    if not export.write_artifacts:
        return
    tdir = os.path.join(root, "transcripts")
    os.makedirs(tdir, exist_ok=True)
    for transcript in export.transcripts:
        sid = transcript.session_id or "unstarted"
        _dump_json(os.path.join(tdir, f"{sid}.json"), transcript.to_dict())
        if not transcript.settled:
            continue
        adir = os.path.join(root, "artifacts", sid)
        os.makedirs(adir, exist_ok=True)
        _dump_json(os.path.join(adir, "provenance.json"), transcript.provenance)
        delivered = _delivered_bytes(export, transcript)
        if delivered is not None:
            with open(os.path.join(adir, "output.bin"), "wb") as fh:
                fh.write(delivered)
