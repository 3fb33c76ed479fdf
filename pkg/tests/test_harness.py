import csv
import io
import json
import math

import pytest

from kamspectra.harness.cli import main
from kamspectra.harness.config import ConfigError, RunConfig, build_config, env_overrides
from kamspectra.harness.io import ArtifactWriter, csv_bytes, fmt_float, json_bytes


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_precedence_defaults_file_env_cli(tmp_path):
    p = _write(tmp_path, "c.toml", "[spectral]\nk = 12.0\n[run]\nseed = 3\nlevels = 2\n")
    env = {"KAMSPECTRA_SEED": "5", "KAMSPECTRA_GRID": "128"}
    cfg = build_config(p, {"levels": 1}, environ=env)
    assert cfg.k == 12.0 and cfg.seed == 5 and cfg.grid == 128 and cfg.levels == 1
    assert cfg.c_rho == RunConfig().c_rho


def test_json_config_and_b_pair(tmp_path):
    p = _write(tmp_path, "c.json", json.dumps({"model": {"b": [2.0, 3.0]}, "k": 7.0}))
    cfg = build_config(p, environ={})
    assert (cfg.b1, cfg.b2, cfg.k) == (2.0, 3.0, 7.0)


def test_field_level_errors(tmp_path):
    with pytest.raises(ConfigError, match="mode"):
        build_config(None, {"mode": "fast"}, environ={})
    with pytest.raises(ConfigError, match="unknown configuration fields: bogus"):
        build_config(_write(tmp_path, "c.toml", "bogus = 1\n"), environ={})
    with pytest.raises(ConfigError, match="model"):
        build_config(None, {"delta": 5.0}, environ={})
    with pytest.raises(ConfigError, match="KAMSPECTRA_NOPE"):
        env_overrides({"KAMSPECTRA_NOPE": "1"})


def test_hash_ignores_non_semantic():
    a = RunConfig(out="x", threads=1)
    b = RunConfig(out="y", threads=4)
    c = RunConfig(seed=1)
    assert a.hash() == b.hash() != c.hash()


def test_fmt_float_17_digits():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert float(fmt_float(math.pi)) == math.pi


def test_csv_rfc4180():
    data = csv_bytes(["a", "b"], [[1.5, 'x,"y"'], [True, None]], "h")
    text = data.decode("utf-8")
    assert "\r\n" in text and '"x,""y"""' in text
    rows = list(csv.reader(io.StringIO(text, newline="")))
    assert rows[0] == ["schema_version", "config_hash", "a", "b"]
    assert rows[1] == ["1", "h", "1.5", 'x,"y"'] and rows[2] == ["1", "h", "true", ""]


def test_json_utf8_and_floats():
    doc = json.loads(json_bytes({"v": 0.1, "c": 1 + 2j, "s": "κ", "n": math.nan}, "h"))
    assert doc["schema_version"] == 1 and doc["config_hash"] == "h"
    assert doc["c"] == [1.0, 2.0] and doc["s"] == "κ" and doc["n"] is None
    raw = json_bytes({"v": 0.1}, "h")
    assert b"0.10000000000000001" in raw


def test_manifest_lists_files(tmp_path):
    w = ArtifactWriter(tmp_path, RunConfig())
    w.csv("a.csv", ["x"], [[1.0]])
    w.manifest("trace", {"ok": True})
    doc = json.loads((tmp_path / "artifact.json").read_text())
    assert set(doc["files"]) == {"a.csv"} and doc["config"]["k"] == 10.0


def _run(tmp_path, args, toml):
    cfg = _write(tmp_path, "c.toml", toml)
    return main([args[0], "--config", str(cfg)] + args[1:])


def test_cli_trace_free_circle(tmp_path):
    out = tmp_path / "o"
    code = _run(tmp_path, ["trace", "--out", str(out)],
                "[potential]\nrecipe = []\n[run]\ngrid = 64\n")
    assert code == 0
    rows = list(csv.DictReader(open(out / "curve_k10.csv", newline="")))
    assert rows and all(float(r["kappa"]) == pytest.approx(10.0, rel=1e-14) for r in rows)


def test_cli_trace_two_levels_nested(tmp_path):
    out = tmp_path / "o"
    toml = ("[model]\nb = [2.0, 2.0]\n[potential]\nrecipe = [{kind=\"cosine\", amplitude=0.25},"
            " {kind=\"explicit\", coefficients=[[2,1,0,1.0]]}]\n"
            "[spectral]\nphi_window = [0.3, 0.4]\n[run]\ngrid = 128\n")
    assert _run(tmp_path, ["trace", "--out", str(out), "--levels", "2"], toml) == 0
    doc = json.loads((out / "domains_k10.json").read_text())
    d1, d2 = doc["domains"]
    assert d2["level"] == 2 and d2["length"] <= d1["length"]
    assert len(d2["holes"]) >= len(d1["holes"])


def test_cli_determinism(tmp_path):
    toml = "[spectral]\nphi_window = [0.3, 0.5]\n[run]\ngrid = 256\n"
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(tmp_path, ["trace", "--out", str(a)], toml) == 0
    assert _run(tmp_path, ["trace", "--out", str(b), "--threads", "2"], toml) == 0
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes(), f


def test_cli_verify_report(tmp_path):
    out = tmp_path / "v"
    code = _run(tmp_path, ["verify", "--out", str(out)],
                "[spectral]\nphi_window = [0.3, 0.5]\n[truncation]\nc_rho = 1.3\n")
    doc = json.loads((out / "verify.json").read_text())
    status = {c["name"]: (c["severity"], c["status"]) for c in doc["checks"]}
    assert status["resonant_point_rejected"] == ("expected-failure", "pass")
    assert code == (1 if any(s != "pass" for sev, s in status.values() if sev == "contract") else 0)
    assert code == 0


def test_cli_swisscheese_free(tmp_path):
    out = tmp_path / "s"
    code = _run(tmp_path, ["swisscheese", "--out", str(out)],
                "[potential]\nrecipe = []\n[spectral]\nphi_window = [0.3, 0.45]\n"
                "[truncation]\nc_rho = 1.3\n[run]\nmax_components = 3\n")
    assert code == 0
    doc = json.loads((out / "artifact.json").read_text())["summary"]
    assert doc["nested"] and doc["conserved"] == doc["components"]
    assert doc["arcs_outside_disks"] == []


def test_cli_config_error(tmp_path, capsys):
    assert main(["trace", "--config", str(_write(tmp_path, "c.toml", "mode = 'x'\n"))]) == 2
    assert "mode" in capsys.readouterr().err
