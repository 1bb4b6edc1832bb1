import subprocess
import sys

import numpy as np
import pytest

from elscat import io as eio
from elscat.cli import main

CONFIG = """
lam = 2.0
mu = 1.0
N = 8
load = pot2
load_amplitude = 0.5
noise = 0.05
seed = 11
M = 2
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(CONFIG, encoding="utf-8")
    return p


def test_forward_writes_field_and_far_field(cfg, tmp_path):
    out = tmp_path / "fwd"
    assert main(["forward", "--config", str(cfg), "--out", str(out), "--channel", "ps",
                 "--receivers", "0,1.5,3"]) == 0
    v, grid = eio.read_field(out / "scattered.elsc")
    assert v.shape == (2, 8, 8) and grid.N == 8
    _, header, rows = eio.read_csv(out / "far_field.csv")
    assert header[0] == "angle" and rows.shape == (3, 9)


@pytest.mark.parametrize("kind,suffix", [("backscatter", "elbd"), ("fixed-angle", "elfa")])
def test_synth_then_born(cfg, tmp_path, kind, suffix):
    out = tmp_path / kind
    assert main(["synth", "--config", str(cfg), "--out", str(out), "--kind", kind,
                 "--theta", "0,1", "--noise", "0.02", "--seed", "4"]) == 0
    data = eio.read_dataset(out / f"dataset.{suffix}")
    assert data.noise_level == 0.02
    born = tmp_path / "born"
    assert main(["born", "--config", str(cfg), "--out", str(born), "--data",
                 str(out / f"dataset.{suffix}"), "--true-load"]) == 0
    QB, _ = eio.read_field(born / "born.elsc")
    assert QB.shape == (2, 2, 8, 8)
    _, header, rows = eio.read_csv(born / "central_section.csv")
    assert header == ["x1", "Q11", "ReQB11"] and np.all(np.isfinite(rows))


def test_born_on_data_without_reference_writes_nan(cfg, tmp_path):
    main(["synth", "--config", str(cfg), "--out", str(tmp_path / "s")])
    assert main(["born", "--config", str(cfg), "--out", str(tmp_path / "b"), "--data",
                 str(tmp_path / "s" / "dataset.elbd")]) == 0
    _, _, rows = eio.read_csv(tmp_path / "b" / "central_section.csv")
    assert np.all(np.isnan(rows[:, 1]))


def test_iterate_outputs(cfg, tmp_path, capsys):
    out = tmp_path / "it"
    assert main(["iterate", "--config", str(cfg), "--out", str(out), "--true-load"]) == 0
    assert sorted(p.name for p in out.glob("iterate_*.elsc")) == [
        "iterate_1.elsc", "iterate_2.elsc", "iterate_3.elsc"]
    _, header, rows = eio.read_csv(out / "error.csv")
    assert header == ["n", "error"] and rows.shape == (3, 2) and np.all(np.isfinite(rows))
    out2 = tmp_path / "upd"
    assert main(["iterate", "--config", str(cfg), "--out", str(out2), "--M", "1"]) == 0
    _, header, rows = eio.read_csv(out2 / "update.csv")
    assert header == ["n", "update"] and rows.shape == (1, 2)


def test_config_errors_exit_3(cfg, tmp_path):
    assert main(["synth", "--config", str(tmp_path / "none.cfg")]) == 3
    assert main(["synth", "--config", str(cfg), "--set", "nonsense=1"]) == 3
    assert main(["synth", "--config", str(cfg), "--set", "N"]) == 3
    (tmp_path / "junk").write_bytes(b"JUNK" + bytes(60))
    assert main(["born", "--config", str(cfg), "--data", str(tmp_path / "junk")]) == 3


def test_solver_failure_exits_2(cfg, tmp_path):
    args = ["forward", "--config", str(cfg), "--out", str(tmp_path / "f"),
            "--set", "max_iter=1", "--set", "method=gmres", "--set", "load_amplitude=5"]
    assert main(args) == 2


def test_validate_table(tmp_path, capsys):
    assert main(["validate", "--out", str(tmp_path), "--only", "dft_vs_brute_force",
                 "ewald_geometry"]) == 0
    printed = capsys.readouterr().out
    assert printed.count("PASS") == 2
    lines = (tmp_path / "validate.csv").read_text().splitlines()
    assert lines[1] == "check,value,tolerance,passed" and len(lines) == 4


def test_console_script_runs(tmp_path):
    res = subprocess.run([sys.executable, "-m", "elscat.cli", "validate", "--only",
                          "ewald_geometry"], capture_output=True, text=True)
    assert res.returncode == 0 and "PASS" in res.stdout
