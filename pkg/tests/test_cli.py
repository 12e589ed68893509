import json

import pytest
from click.testing import CliRunner

from agora.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def small_config(tmp_path, **extra):
    cfg = {"trials": 3, "duration_s": 5, "caps": {"concurrency_levels": [10]}}
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_run_session_default(runner):
    result = runner.invoke(main, ["run-session", "--seed", "7"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.output)
    assert data["finalState"] == "Settled"
    assert data["gasTotal"] == 159_000


def test_global_flags_accepted_before_and_after_subcommand(runner):
    before = runner.invoke(main, ["--mode", "web3-baseline", "run-session"])
    after = runner.invoke(main, ["run-session", "--mode", "web3-baseline"])
    assert before.exit_code == 0 and after.exit_code == 0
    assert json.loads(before.output)["gasTotal"] == 326_000
    assert json.loads(after.output) == json.loads(before.output)


def test_bench_cost_prints_report(runner, tmp_path):
    result = runner.invoke(main, ["bench", "cost", "--config", small_config(tmp_path)])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["sections"]["cost"]["agentosiSessionGas"] == 159_000


def test_bench_writes_out_then_verify(runner, tmp_path):
    out = tmp_path / "run"
    result = runner.invoke(
        main,
        ["bench", "latency", "--config", small_config(tmp_path), "--out", str(out)],
    )
    assert result.exit_code == 0, result.output
    assert (out / "report.json").exists()

    result = runner.invoke(main, ["verify", str(out)])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["ok"] is True

    prov = next(out.rglob("provenance.json"))
    raw = bytearray(prov.read_bytes())
    raw[5] ^= 0x01
    prov.write_bytes(bytes(raw))
    result = runner.invoke(main, ["verify", str(out)])
    assert result.exit_code == 1
    assert json.loads(result.output)["ok"] is False


def test_verify_requires_target(runner):
    result = runner.invoke(main, ["verify"])
    assert result.exit_code == 2


def test_vectors_emit_and_check(runner, tmp_path):
    path = str(tmp_path / "vectors.json")
    assert runner.invoke(main, ["vectors", path]).exit_code == 0
    assert runner.invoke(main, ["vectors", path, "--check"]).exit_code == 0
    data = json.loads(open(path).read())
    data["identities"][0]["address"] = "00" * 20
    with open(path, "w") as fh:
        json.dump(data, fh)
    result = runner.invoke(main, ["vectors", path, "--check"])
    assert result.exit_code == 1


def test_unreadable_config_is_usage_error(runner, tmp_path):
    missing = str(tmp_path / "nope.json")
    result = runner.invoke(main, ["bench", "cost", "--config", missing])
    assert result.exit_code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = runner.invoke(main, ["bench", "cost", "--config", str(bad)])
    assert result.exit_code == 2


def test_unknown_config_key_is_usage_error(runner, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    result = runner.invoke(main, ["bench", "cost", "--config", str(cfg)])
    assert result.exit_code == 2
