import json

import pytest

from spindrift.cli import main, preset_names, resolve_config

MINI = """
[scenario]
kind = survey

[grid]
n = 64
length = 32.0

[physics]
nu = 1.0

[field]
kind = constant
direction = 0 0 1

[initial]
kind = pure
sigma = 2.0
bloch = 1 0 0

[time]
horizon = 0.2
dt = 2e-3
cadence = 0.02

[solvers]
enabled = lindblad
"""


def test_preset_names_and_resolution():
    names = preset_names()
    assert names == ["constant_field", "diffusion", "flux_source",
                     "force_balance", "gauge_limit", "spin_separation"]
    path = resolve_config("force_balance")
    assert path.is_file()
    assert resolve_config("force_balance.cfg") == path


def test_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    for name in preset_names():
        assert name in out


def test_validate_preset(capsys):
    assert main(["validate", "spin_separation"]) == 0
    out = capsys.readouterr().out
    assert "ok" in out and "helix" in out and "unpolarized" in out
    assert "lindblad trajectories semiclassical gauge" in out


def test_unknown_config_exits_1(capsys):
    assert main(["validate", "no_such_preset"]) == 1
    err = capsys.readouterr().err
    assert "configuration error" in err and "constant_field" in err


def test_config_error_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text(MINI.replace("nu = 1.0", "nu = -1"))
    assert main(["run", str(bad)]) == 1
    assert "decoherence rate" in capsys.readouterr().err


def test_run_writes_run_directory(tmp_path, capsys):
    config = tmp_path / "mini.cfg"
    config.write_text(MINI)
    out_dir = tmp_path / "out" / "mini"
    assert main(["run", str(config), "--out", str(out_dir)]) == 0
    stdout = capsys.readouterr().out
    assert "passed" in stdout
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["scenario"] == "survey"
    # a second run with the same --out gets a suffixed directory
    assert main(["run", str(config), "--out", str(out_dir)]) == 0
    assert (tmp_path / "out" / "mini-2" / "manifest.json").is_file()


def test_output_root_env_var(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("SPINDRIFT_OUTPUT_ROOT", str(tmp_path / "root"))
    config = tmp_path / "mini.cfg"
    config.write_text(MINI)
    assert main(["run", str(config)]) == 0
    capsys.readouterr()
    assert (tmp_path / "root" / "mini" / "report.json").is_file()


def test_solver_and_seed_overrides(tmp_path, capsys):
    config = tmp_path / "mini.cfg"
    config.write_text(MINI + "\n[trajectories]\nn_traj = 3\n")
    out_dir = tmp_path / "traj"
    code = main(["run", str(config), "--solver", "lindblad trajectories",
                 "--seed", "42", "--out", str(out_dir)])
    assert code == 0
    capsys.readouterr()
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["base_seed"] == 42
    assert "trajectories" in manifest["artifacts"]


def test_failed_check_exits_3_and_names_the_check(tmp_path, capsys):
    # a cadence this coarse cannot resolve the early force ramp
    config = tmp_path / "coarse.cfg"
    config.write_text("""
[scenario]
kind = force_balance

[grid]
n = 64
length = 32.0

[physics]
nu = 1.0

[field]
kind = helix
q = 0.39269908169872414

[initial]
kind = pure
sigma = 2.0
bloch = 0 0 1

[time]
horizon = 0.5
dt = 2.5e-3
cadence = 0.25

[solvers]
enabled = lindblad
""")
    assert main(["run", str(config), "--out", str(tmp_path / "coarse")]) == 3
    captured = capsys.readouterr()
    assert "check failed: early_force" in captured.err
    report = json.loads((tmp_path / "coarse" / "report.json").read_text())
    assert not report["passed"]


def test_usage_error_exits_1(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 1
