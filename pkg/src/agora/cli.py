"""Command-line client for the simulator service.

By default commands run against an in-process instance of the HTTP app
(no sockets, fully deterministic); ``--server-url`` points them at a
remote server instead, and ``serve`` starts one. Exit codes: 0 success,
1 run/verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import json
import sys

import click

FAILURE = 1
USAGE = 2


class Client:
    """Minimal HTTP client; in-process by default."""

    def __init__(self, server_url: str | None):
        if server_url:
            import httpx

            self._client = httpx.Client(base_url=server_url, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app(), raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code >= 400:
            detail = response.json().get("detail", response.text)
            click.echo(f"error: {detail}", err=True)
            sys.exit(USAGE if response.status_code in (400, 422) else FAILURE)
        return response.json()


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, ValueError) as err:
        click.echo(f"error: cannot read config {path}: {err}", err=True)
        sys.exit(USAGE)


def _overrides(ctx_obj: dict) -> dict:
    keys = ("seed", "mode", "workload", "trials", "concurrency", "duration_s", "block_time_ms")
    return {k: ctx_obj[k] for k in keys if ctx_obj.get(k) is not None}


_GLOBAL_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="JSON config file (sectioned; see README)."),
    click.option("--seed", type=int, default=None, help="Master RNG seed."),
    click.option("--mode", type=click.Choice(["agentosi", "web3-baseline"]), default=None),
    click.option("--workload", type=click.Choice(["light", "pipeline", "genai"]), default=None),
    click.option("--trials", type=int, default=None, help="Latency trials per workload."),
    click.option("--concurrency", type=int, default=None,
                 help="Single throughput concurrency level (default: sweep)."),
    click.option("--duration-s", type=int, default=None, help="Throughput run duration."),
    click.option("--block-time-ms", type=int, default=None, help="Ledger block time."),
    click.option("--out", "out_dir", type=click.Path(), default=None,
                 help="Directory for report.json, CSVs, and run evidence."),
    click.option("--audit-log", "audit_log", flag_value=True, default=None,
                 help="Also export the message-relay audit log."),
    click.option("--server-url", default=None, help="Remote server (default: in-process)."),
]


def global_options(command):
    """Accept the shared flags on the subcommand as well as the group."""
    for option in reversed(_GLOBAL_OPTIONS):
        command = option(command)
    return command


def _merge_obj(obj: dict, config_path, **kwargs) -> dict:
    merged = dict(obj or {})
    if config_path is not None:
        merged["config"] = _load_config(config_path)
    merged.setdefault("config", {})
    for key, value in kwargs.items():
        if value is not None:
            merged[key] = value
    if merged.get("audit_log") is None:
        merged["audit_log"] = False
    for key in ("out_dir", "server_url"):
        merged.setdefault(key, None)
    return merged


@click.group()
@global_options
@click.pass_context
def main(ctx, config_path, **kwargs):
    """Agent interop stack: session simulator, benchmarks, offline audit."""
    ctx.obj = _merge_obj({}, config_path, **kwargs)


@main.command("run-session")
@global_options
@click.pass_obj
def run_session_cmd(obj, config_path, **kwargs):
    """Run one pay-per-request session and print its outcome."""
    obj = _merge_obj(obj, config_path, **kwargs)
    client = Client(obj["server_url"])
    data = client.post(
        "/v1/sessions",
        {
            "config": obj["config"],
            "overrides": _overrides(obj),
            "out_dir": obj["out_dir"],
            "audit_log": obj["audit_log"],
        },
    )
    click.echo(json.dumps(
        {
            "finalState": data["final_state"],
            "failureReason": data["failure_reason"],
            "gasTotal": data["gas_total"],
            "phaseTimings": data["phase_timings"],
        },
        indent=2, sort_keys=True,
    ))
    if data["final_state"] != "Settled":
        sys.exit(FAILURE)


@main.command("bench")
@click.argument("section", type=click.Choice(["cost", "latency", "throughput", "all"]))
@global_options
@click.pass_obj
def bench_cmd(obj, section, config_path, **kwargs):
    """Run benchmark SECTION and print the report."""
    obj = _merge_obj(obj, config_path, **kwargs)
    client = Client(obj["server_url"])
    data = client.post(
        "/v1/bench",
        {
            "section": section,
            "config": obj["config"],
            "overrides": _overrides(obj),
            "out_dir": obj["out_dir"],
            "audit_log": obj["audit_log"],
        },
    )
    click.echo(json.dumps(data["report"], indent=2, sort_keys=True))


@main.command("verify")
@click.argument("run_dir", type=click.Path(), required=False)
@global_options
@click.pass_obj
def verify_cmd(obj, run_dir, config_path, **kwargs):
    """Offline-audit an exported run directory (defaults to --out)."""
    obj = _merge_obj(obj, config_path, **kwargs)
    target = run_dir or obj["out_dir"]
    if not target:
        click.echo("error: give a RUN_DIR argument or --out", err=True)
        sys.exit(USAGE)
    client = Client(obj["server_url"])
    data = client.post("/v1/verify", {"run_dir": target})
    click.echo(json.dumps(data, indent=2, sort_keys=True))
    if not data["ok"]:
        sys.exit(FAILURE)


@main.command("vectors")
@click.argument("path", type=click.Path())
@click.option("--check", "do_check", is_flag=True, default=False,
              help="Verify PATH instead of writing it.")
@global_options
@click.pass_obj
def vectors_cmd(obj, path, do_check, config_path, **kwargs):
    """Emit (default) or --check golden test vectors at PATH."""
    obj = _merge_obj(obj, config_path, **kwargs)
    client = Client(obj["server_url"])
    data = client.post(
        "/v1/vectors", {"action": "check" if do_check else "emit", "path": path}
    )
    click.echo(json.dumps(data, indent=2, sort_keys=True))
    if not data["ok"]:
        sys.exit(FAILURE)


@main.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve_cmd(host, port):
    """Start the HTTP server."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
