import csv
import hashlib
import io
import json

import pytest

import wsnmark.harness as harness
from wsnmark.errors import ConfigError
from wsnmark.harness import (
    AttackEntry,
    ExperimentConfig,
    derive_seed,
    format_report,
    main,
    run_experiment,
)
from wsnmark.kolmogorov import WatermarkPayload
from wsnmark.lfsr import REFERENCE_KEY, generate
from wsnmark.bitcodec import encode_value

SMALL = dict(trials=1, attacks=[{"kind": "deletion"}], solver={"multistart_count": 4})


def test_derive_seed_is_stable_and_kind_specific():
    expected = int.from_bytes(hashlib.sha256(b"0:deletion:3").digest()[:8], "big") >> 1
    assert derive_seed(0, "deletion", 3) == expected
    assert derive_seed(0, "deletion", 3) != derive_seed(0, "sybil", 3)
    assert 0 <= derive_seed("x") < 2**63


def test_default_config_uses_reference_parameters():
    c = ExperimentConfig()
    assert c.sensed_value == 120 and c.temperature == 36.0
    assert c.key == REFERENCE_KEY
    assert [a.kind for a in c.attacks] == ["false_insertion", "modification", "deletion",
                                           "replication", "sybil"]
    assert [a.intensity for a in c.attacks] == [4, 2, 1, 2, 3]
    assert c.trials == 20


def test_config_from_dict():
    c = ExperimentConfig.from_dict({
        "scenario": {"mode": "noise-free", "time_interval": [0.03, 0.05]},
        "sensed_value": 7,
        "key": {"taps": [1, 3]},
        "attacks": ["sybil", {"kind": "deletion", "intensity": 2}],
        "trials": 3,
        "format": "csv",
    })
    assert c.scenario_mode == "noise-free" and c.time_interval == (0.03, 0.05)
    assert c.attacks == (AttackEntry("sybil", 3), AttackEntry("deletion", 2))
    assert c.key.taps == (1, 3)
    assert c.solver_config.multistart_count == 8


@pytest.mark.parametrize("bad", [
    {"attacks": ["jamming"]},
    {"trials": 0},
    {"format": "xml"},
    {"sensed_value": 0},
    {"sensed_value": 300},
    {"key": {"taps": [9]}},
    {"solver": {"multistart_count": 0}},
    {"colour": "red"},
    {"scenario": {"mode": "file"}},
])
def test_invalid_config(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_unknown_attack_rejected_before_any_trial(monkeypatch, tmp_path):
    calls = []
    monkeypatch.setattr(harness, "run_trial", lambda *a: calls.append(a))
    path = tmp_path / "cfg.yaml"
    path.write_text("attacks: [deletion, jamming]\n")
    assert main(["experiment", "--config", str(path)]) != 0
    assert calls == []


@pytest.fixture(scope="module")
def small_report():
    return run_experiment(ExperimentConfig.from_dict(SMALL))


def test_report_arithmetic(small_report):
    assert small_report["version"] == 1 and small_report["tool_version"]
    for row in small_report["rows"]:
        assert row["robust"] + row["not_robust"] + row["failed"] == row["trials"]
        if row["presence_rate"] is not None:
            assert 0.0 <= row["presence_rate"] <= 1.0
    assert small_report["config"]["trials"] == 1


def test_small_run_is_byte_identical(small_report):
    harness.cached_solve.cache_clear()
    again = run_experiment(ExperimentConfig.from_dict(SMALL))
    assert format_report(again, "json") == format_report(small_report, "json")


def test_formats(small_report):
    doc = json.loads(format_report(small_report, "json"))
    assert doc["schema"] == "experiment_report"
    rows = list(csv.DictReader(io.StringIO(format_report(small_report, "csv"))))
    assert list(rows[0]) == ["kind", "trial", "seed", "status", "threshold", "similarity",
                             "present", "robust"]
    assert rows[0]["kind"] == "deletion"
    table = format_report(small_report, "table")
    assert table.splitlines()[0].startswith("attack")
    assert "deletion" in table


def test_failed_trials_flag_degenerate_row(monkeypatch):
    def broken(*a, **k):
        raise ValueError("boom")

    monkeypatch.setattr(harness, "embed", broken)
    report = run_experiment(ExperimentConfig.from_dict({**SMALL, "trials": 2}))
    row = report["rows"][0]
    assert row["failed"] == 2 and row["degenerate"]
    assert all(t["status"] == "failed" for t in report["trials"])
    assert "degenerate" in format_report(report, "table")


def test_cli_generate_matches_library(capsys):
    assert main(["generate", "--value", "120", "--taps", "1,2,5,6"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "0001111000001101110011000111"
    assert out[1] == "1 14 0 13 12 12 7"
    payload = WatermarkPayload.from_signal(generate(encode_value(120, 8), REFERENCE_KEY, 28))
    assert out[0] == str(payload.signal)


def test_cli_generate_json(capsys):
    assert main(["generate", "--value", "120", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["selections"] == [[4, 5, 6, 7], [6, 7], [2, 3, 4, 7], [1, 5, 6, 7]]


@pytest.fixture(scope="module")
def record_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "record.json"
    assert main(["embed", "--value", "120", "--scenario-seed", "3", "--seed", "5",
                 "--out", str(path)]) == 0
    return path


def test_cli_extract(record_file, capsys):
    capsys.readouterr()
    assert main(["extract", str(record_file)]) == 0
    assert capsys.readouterr().out.strip() == "120"


def test_cli_extract_tampered(record_file, tmp_path, capsys):
    doc = json.loads(record_file.read_text())
    doc["watermarked_problem"]["objective_coefficients"][1] = 9
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["extract", str(bad)]) == 3
    assert "tamper" in capsys.readouterr().err


def test_cli_attack_then_detect(record_file, tmp_path, capsys):
    attacked = tmp_path / "deleted.json"
    assert main(["attack", str(record_file), "--kind", "deletion", "--seed", "1",
                 "--out", str(attacked)]) == 0
    assert len(json.loads(attacked.read_text())["watermark_constraints"]) == 3
    capsys.readouterr()
    assert main(["detect", "--record", str(record_file), "--suspect", str(attacked)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["schema"] == "detection_report"
    assert report["robust"] is True


def test_cli_solve(record_file, capsys):
    capsys.readouterr()
    assert main(["solve", str(record_file)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["feasible"] and len(doc["error_vector"]) == 7


def test_cli_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code != 0
    assert main(["extract", str(tmp_path / "missing.json")]) == 1
    (tmp_path / "scenario.json").write_text('{"schema": "scenario"}')
    assert main(["solve", str(tmp_path / "scenario.json")]) == 1


def test_cli_embed_from_scenario_file(tmp_path, capsys):
    path = tmp_path / "scenario.yaml"
    path.write_text("anchors: [[0.1, 0.2], [0.9, 0.3], [0.4, 0.8]]\n"
                    "temperature: 36\ntimes: [0.05, 0.04, 0.06]\n")
    out = tmp_path / "rec.json"
    assert main(["embed", "--value", "33", "--scenario", str(path), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["extract", str(out)]) == 0
    assert capsys.readouterr().out.strip() == "33"
