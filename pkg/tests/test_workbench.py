import json
import os

import pytest

from bjjprobe.hilbert import InvariantError
from bjjprobe.workbench import ConfigError, get_preset, list_presets, preset_names, resolve
from bjjprobe.workbench import cli, runner
from bjjprobe.workbench.config import schema_errors


def small_config(**over):
    cfg = {
        "kind": "track",
        "params": {"kappa": 1.0, "r_tun": 1.0, "beta": 0.0625, "gamma": 500.0, "eta": 1.0},
        "space": {"n_atoms": 3, "cav_cutoff": 3},
        "initial_state": {"atoms": {"fock": 3}, "cavity": {"fock": 0}},
        "driven": True,
        "time": {"start": 0.0, "stop": 0.2, "points": 41},
        "track": {"t0": 0.07, "t1": 0.2},
    }
    cfg.update(over)
    return cfg


def test_catalog():
    cat = list_presets()
    names = {c["name"] for c in cat}
    assert len(cat) >= 12
    for n in ("fig2", "fig3a", "fig3b", "fig3c", "fig3d", "fig4", "fig5", "fig6a", "fig6b",
              "fig7a", "fig7b", "fig8a", "fig8b"):
        assert n in names
    for name in preset_names():
        assert schema_errors(get_preset(name)) == []
        resolve(get_preset(name))


def test_preset_caption_values():
    fig4 = resolve(get_preset("fig4"))
    assert (fig4["xi"]["t0"], fig4["xi"]["t1"]) == (0.07, 0.8)
    assert fig4["params"]["kappa"] == 1.0
    for name in ("fig3a", "fig3c"):
        p = resolve(get_preset(name))["params"]
        assert p["gamma"] / p["kappa"] == 500 and p["beta"] / p["kappa"] == 1 / 16
        assert p["eta"] == p["kappa"]
    assert resolve(get_preset("fig3a"))["params"]["r_tun"] == 1.0
    assert resolve(get_preset("fig3c"))["params"]["r_tun"] == 30.0
    fig6 = get_preset("fig6a")
    assert fig6["params"]["r_tun"] == 0.5
    assert any("0.15" in d for d in fig6["deviations"])
    assert get_preset("fig6a-text")["params"]["r_tun"] == 0.15
    fig7 = resolve(get_preset("fig7a"))
    assert fig7["scan"]["times"] == [10.0] and fig7["space"]["n_atoms"] == 2
    fig8 = resolve(get_preset("fig8b"))
    assert fig8["params"]["kappa"] == 0.15 and fig8["scan"]["parameter"] == "r_tun"
    assert resolve(get_preset("fig8a"))["params"]["r_tun"] == 0.15
    assert all(isinstance(c["deviations"], list) for c in list_presets())
    assert resolve(get_preset("fig6b"))["params"]["e0"] == 0.1


def test_unknown_preset():
    with pytest.raises(KeyError):
        get_preset("fig99")


def test_schema_rejects_unknown_and_missing_keys():
    cfg = small_config()
    cfg["params"]["colour"] = 1
    assert any("colour" in e for e in schema_errors(cfg))
    cfg = small_config()
    del cfg["space"]
    errs = schema_errors(cfg)
    assert any("'space' is a required property" in e for e in errs)


def test_negative_gamma_writes_nothing(tmp_path):
    cfg = small_config()
    cfg["params"]["gamma"] = -1.0
    with pytest.raises(ConfigError) as info:
        runner.run(cfg, tmp_path / "out")
    assert any("gamma" in e for e in info.value.errors)
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("change, fragment", [
    ({"initial_state": {"atoms": {"fock": 9}, "cavity": {"fock": 0}}}, "exceeds n_atoms"),
    ({"driven": False}, "driven"),
    ({"wigner": {"extent": 3.0}}, "only valid"),
    ({"initial_state": {"atoms": {"fock": 1}, "cavity": {"coherent": [3.0, 0.0]}}}, "coherent tail"),
])
def test_semantic_checks(change, fragment):
    with pytest.raises(ConfigError) as info:
        resolve(small_config(**change))
    assert any(fragment in e for e in info.value.errors)


def test_resolve_expands_defaults_and_alias():
    cfg = small_config()
    cfg["params"]["omega_a"] = 0.3
    res = resolve(cfg)
    assert res["params"]["e0"] == 0.3 and "omega_a" not in res["params"]
    assert res["numerics"]["rtol"] == 1e-8
    assert res["seed"] == 0 and res["deviations"] == []
    assert res["track"]["lag_max"] == 0.05
    with pytest.raises(ConfigError):
        resolve(dict(cfg, params=dict(cfg["params"], e0=0.1)))


def test_validate_reports_regime():
    rep = runner.validate(get_preset("fig3a"))
    assert rep["ok"] and rep["regime"]["overall"] == "satisfied" and rep["warnings"] == []
    cfg = small_config()
    cfg["params"]["gamma"] = 0.1
    rep = runner.validate(cfg)
    assert rep["ok"]
    assert rep["regime"]["overall"] == "violated"
    assert any("gamma/(beta N)" in w for w in rep["warnings"])
    bad = runner.validate({"kind": "track"})
    assert not bad["ok"] and any("params" in e for e in bad["errors"])


def test_track_run_and_file_formats(tmp_path):
    bundle = runner.run(small_config(), tmp_path)
    files = sorted(os.listdir(tmp_path))
    assert files == ["report.json", "resolved_config.json", "runtime.json", "series.csv"]
    text = (tmp_path / "series.csv").read_bytes()
    assert b"\r" not in text
    header = text.split(b"\n")[0].decode()
    assert header == "t,n1_exact,n1_est,n1sq_exact,n1sq_est,n_cav"
    assert len(text.strip().split(b"\n")) == 42
    resolved = json.loads((tmp_path / "resolved_config.json").read_text())
    assert resolved == bundle.config
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["invariants"]["trace_error"] < 1e-8
    # rerunning the resolved config reproduces the payloads
    again = runner.run(resolved)
    assert again.payloads == bundle.payloads


def test_gnuplot_layout(tmp_path):
    cfg = {
        "kind": "wigner",
        "params": {"gamma": 0.5},
        "space": {"n_atoms": 0, "cav_cutoff": 8},
        "initial_state": {"atoms": {"fock": 0}, "cavity": {"fock": 1}},
        "time": {"values": [0.0, 1.0]},
        "wigner": {"extent": 4.0, "points": 21},
        "output": {"gnuplot": True},
    }
    bundle = runner.run(cfg, tmp_path)
    assert "wigner_001.dat" in bundle.payloads
    blocks = bundle.payloads["wigner_000.dat"].strip("\n").split("\n\n")
    assert len(blocks) == 21
    report = json.loads(bundle.payloads["report.json"])
    assert report["snapshots"][0]["w_min"] < -0.3


def test_qfi_kinds():
    base = {
        "params": {"omega_a": 0.1, "omega_c": 0.1, "omega_p": 0.1, "eta": 0.1, "gamma": 1.0,
                   "beta": 1.0, "r_tun": 0.5, "kappa": 0.15},
        "space": {"n_atoms": 2, "cav_cutoff": 6},
        "initial_state": {"atoms": {"fock": 2}, "cavity": {"fock": 0}},
        "driven": True,
        "numerics": {"rtol": 1e-11, "atol": 1e-13},
    }
    single = runner.run(dict(base, kind="qfi-single", qfi={"parameters": ["r_tun"], "t": 5.0}))
    rep = json.loads(single.payloads["report.json"])["results"][0]
    assert rep["classical_fisher"]["sld_eigenbasis"] == pytest.approx(rep["qfi"], rel=1e-3)
    multi = runner.run(dict(base, kind="qfi-multi", qfi={"t": 5.0}))
    rep = json.loads(multi.payloads["report.json"])
    assert rep["report"]["parameters"] == ["r_tun", "kappa"]
    assert rep["cramer_rao_joint"] >= 0.5 * rep["cramer_rao_sequential"] - 1e-12
    assert set(rep["lambda"]) >= {"lambda_se", "lambda_mp"}


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(small_config()))
    assert cli.main(["validate", str(good)]) == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(small_config(params={"gamma": -1.0})))
    assert cli.main(["validate", str(bad)]) == 1
    assert cli.main(["run", str(bad), "--out", str(tmp_path / "o1")]) == 1
    assert not (tmp_path / "o1").exists()
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{not json")
    assert cli.main(["run", str(garbage), "--out", str(tmp_path / "o2")]) == 1
    assert cli.main(["run", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o3")]) == 3
    assert cli.main(["run", "--preset", "nope", "--out", str(tmp_path / "o4")]) == 1
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["run", str(good), "--out", str(blocker / "sub")]) == 3

    def boom(cfg):
        raise InvariantError("minimum eigenvalue -1e-3")
    monkeypatch.setitem(runner._PIPELINES, "track", boom)
    assert cli.main(["run", str(good), "--out", str(tmp_path / "o5")]) == 2
    assert "InvariantError" in capsys.readouterr().err
    assert not (tmp_path / "o5").exists()
    assert cli.main(["presets"]) == 0
    assert "fig3a" in capsys.readouterr().out


def test_thread_env(monkeypatch):
    monkeypatch.setenv("PROBE_THREADS", "1")
    for var in ("OMP_NUM_THREADS", "NUMBA_NUM_THREADS"):
        monkeypatch.delenv(var, raising=False)
    cli._apply_thread_limit()
    assert os.environ["OMP_NUM_THREADS"] == "1"
    monkeypatch.setenv("PROBE_THREADS", "zero")
    with pytest.raises(SystemExit):
        cli._apply_thread_limit()


def test_bare_cavity_preset_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--preset", "bare-cavity", "--out", str(a)]) == 0
    assert cli.main(["run", "--preset", "bare-cavity", "--out", str(b)]) == 0
    for name in os.listdir(a):
        if name != runner.RUNTIME_FILE:
            assert (a / name).read_bytes() == (b / name).read_bytes(), name
