import json
import math
from importlib import resources

import jsonschema
import pytest

from oe_chaos import cli

SMALL_KR = {"n_kicks": 40, "n_members": 4, "K_steps": 11}


def write_config(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def schema():
    return json.loads(resources.files("oe_chaos").joinpath("schemas/summary.schema.json").read_text())


def test_list(capsys):
    assert cli.main(["list"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [ln.split()[0] for ln in lines] == [k for k, _, _ in cli.EXPERIMENTS]
    assert len(lines) == 7
    assert all("[fig:" in ln for ln in lines)


def test_unknown_key_exits_2(tmp_path, capsys):
    code = cli.main(["kr-critical", "--config", write_config(tmp_path, {"K_mni": 0.3}), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "K_mni" in capsys.readouterr().err


def test_invalid_value_exits_2(tmp_path, capsys):
    assert cli.main(["kr-critical", "--N", "100", "--chi", "8", "--out", str(tmp_path)]) == 2
    assert "chi" in capsys.readouterr().err


def test_unknown_kind_exits_2(tmp_path):
    assert cli.main(["nonsense", "--out", str(tmp_path)]) == 2


@pytest.mark.slow
def test_smoke_kr_critical(tmp_path):
    out = tmp_path / "kr"
    assert cli.main(["kr-critical", "--N", "128", "--chi", "8", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert math.isfinite(summary["estimates"]["K_c_est"])
    jsonschema.validate(summary, schema())
    resolved = json.loads((out / "config.resolved.json").read_text())
    assert resolved["config_hash"] == summary["config_hash"]
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == f"# config-hash: {summary['config_hash']}"
    assert "mode,chi,K,mean_oe,stderr,curvature" in lines


def test_same_seed_same_bytes(tmp_path):
    cfg = write_config(tmp_path, SMALL_KR)
    for name in ("a", "b"):
        args = ["kr-critical", "--N", "64", "--chi", "4,8", "--seed", "7", "--config", cfg, "--out", str(tmp_path / name)]
        assert cli.main(args) in (0, 3)
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_threads_and_flags_override_config(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, {**SMALL_KR, "seed": 1})
    monkeypatch.setenv("OE_CHAOS_THREADS", "2")
    args = ["kr-critical", "--N", "64", "--chi", "8", "--seed", "7", "--config", cfg]
    cli.main(args + ["--out", str(tmp_path / "a")])
    cli.main(args + ["--threads", "1", "--out", str(tmp_path / "b")])
    ra = json.loads((tmp_path / "a" / "config.resolved.json").read_text())
    rb = json.loads((tmp_path / "b" / "config.resolved.json").read_text())
    assert ra["config"]["seed"] == 7
    assert ra["config_hash"] == rb["config_hash"]
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_short_window_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path, {"classical_steps": 2000, "n_members": 2})
    assert cli.main(["lyapunov", "--d", "256", "--K", "10", "--n-cells", "16", "--config", cfg, "--out", str(tmp_path)]) == 3
    assert "Ehrenfest window" in capsys.readouterr().err


def test_classical_summary_validates(tmp_path):
    cfg = write_config(tmp_path, {"n_init": 4, "n_steps": 2000})
    assert cli.main(["classical-lyapunov", "--K", "10", "--config", cfg, "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    jsonschema.validate(summary, schema())


def test_husimi_dump(tmp_path):
    assert cli.main(["husimi-dump", "--d", "64", "--n-cells", "256", "--out", str(tmp_path)]) == 0
    rows = [ln for ln in (tmp_path / "results.csv").read_text().splitlines() if not ln.startswith("#")]
    assert rows[0] == "q_index,p_index,q,p,husimi,pgm"
    assert len(rows) == 257
    assert sum(float(r.split(",")[5]) for r in rows[1:]) == pytest.approx(1.0, abs=1e-8)
