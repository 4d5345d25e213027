"""Smoke tests for the python module and the installed CLI binary."""

import json
import math
import os
import subprocess

import numpy as np
import pytest

import thomaslab


def thomas_config(**overrides):
    cfg = {
        "model": {
            "lattice": [[1.0]],
            "cross_section": {"kind": "interval", "length": math.pi, "bc": "dirichlet"},
        },
        "task": {"name": "thomas", "tau": {"min": 5.0, "max": 40.0, "count": 5}},
        "numeric": {"lambda_max": 900.0},
    }
    cfg.update(overrides)
    return cfg


def test_dual_matrix_hexagonal():
    basis = np.array([[1.0, 0.0], [0.5, 0.5 * math.sqrt(3.0)]])
    dual = np.asarray(thomaslab.dual_matrix(basis))
    gram = basis @ dual.T
    assert np.allclose(gram, 2.0 * math.pi * np.eye(2), atol=1e-12)
    expected_row0 = 2.0 * math.pi * np.array([1.0, -1.0 / math.sqrt(3.0)])
    assert np.allclose(dual[0], expected_row0, atol=1e-12)


def test_free_eigenvalue_formula():
    for n1, extra, tau in [(0, 1.0, 2.0), (-3, 7.5, 11.0), (4, 0.0, 0.5)]:
        got = thomaslab.free_eigenvalue(n1, extra, tau)
        axis = 2.0 * math.pi * n1 + math.pi + 1j * tau
        assert abs(got - (axis * axis + extra)) < 1e-12 * max(1.0, abs(got))


def test_lemma_sums_reference_value():
    s1, s2 = thomaslab.lemma_sums(0.1, 100.0)
    assert abs(s1 - 3.9382608065782042) < 1e-8
    assert abs(s2 - 3.9584737844603498) < 1e-8


def test_fit_loglog_recovers_power_law():
    x = np.linspace(3.0, 50.0, 20)
    y = 2.5 * x**0.75
    fit = thomaslab.fit_loglog(list(x), list(y))
    assert abs(fit["slope"] - 0.75) < 1e-10
    assert fit["rms_residual"] < 1e-10


def test_validate_flags_low_dimension():
    cfg = {
        "model": {
            "lattice": [[1.0]],
            "cross_section": {"kind": "circle", "length": 2.0 * math.pi},
        },
        "task": {"name": "thomas", "tau": {"values": [3.0, 6.0]}},
    }
    warnings = thomaslab.validate(json.dumps(cfg))
    assert any("below the analyzed range" in w for w in warnings)


def test_unknown_key_raises_config_error():
    cfg = thomas_config()
    cfg["task"]["surprise"] = 1
    with pytest.raises(thomaslab.ConfigError, match="task.surprise"):
        thomaslab.validate(json.dumps(cfg))


def test_run_writes_artifacts_and_is_deterministic(tmp_path):
    cfg = json.dumps(thomas_config())
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    code_a, report_a = thomaslab.run(cfg, str(out_a))
    code_b, report_b = thomaslab.run(cfg, str(out_b))
    assert code_a == 0 and code_b == 0
    csv_a = (out_a / "thomas.csv").read_bytes()
    csv_b = (out_b / "thomas.csv").read_bytes()
    assert csv_a == csv_b and len(csv_a) > 0
    report_a = json.loads(report_a)
    report_b = json.loads(report_b)
    assert report_a["status"] == "pass"
    assert report_a["summary"] == report_b["summary"]


def test_cli_binary_round_trip(tmp_path):
    cli = os.environ.get("THOMAS_LAB_CLI")
    if not cli:
        pytest.skip("THOMAS_LAB_CLI not set")
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(thomas_config()))
    out_dir = tmp_path / "out"
    proc = subprocess.run(
        [cli, "run", "--config", str(cfg_path), "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out_dir / "thomas.csv").exists()
    assert (out_dir / "run_report.json").exists()

    bad = thomas_config()
    bad["task"]["name"] = "nonsense"
    bad_path = tmp_path / "bad.json"
    bad_path.write_text(json.dumps(bad))
    proc = subprocess.run(
        [cli, "validate", "--config", str(bad_path)], capture_output=True, text=True
    )
    assert proc.returncode == 2
