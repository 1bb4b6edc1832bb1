import dataclasses

import numpy as np
import pytest

from elscat import LameParams, make_grid
from elscat.backscatter import synthesize_backscatter
from elscat.experiments import (ConfigError, ExperimentConfig, LoadSpec, add_noise, build_config,
                                load_config, make_load, parse_config_text, pot1, pot2,
                                synthesize_dataset)
from elscat.fixed_angle import synthesize_fixed_angle

from conftest import pot2_load


def test_pot1_values():
    assert pot1(np.array(0.0), np.array(0.0)) == 1.2
    assert pot1(np.array(0.7), np.array(0.0)) == 1.0
    assert pot1(np.array(0.4), np.array(0.0)) == 0.0


def test_pot2_is_cut_at_unit_radius():
    assert pot2(np.array(1.0), np.array(0.0)) == 0.0
    assert pot2(np.array(0.99), np.array(0.0)) > 0.0


def test_diamond_vanishes_at_vertex_and_patterns():
    grid = make_grid(2.0, 16)
    Q = make_load(LoadSpec("lipschitz-diamond", pattern="identity", alpha=10.0), grid)
    a = int(np.argmin(np.abs(grid.nodes - 0.5)))
    np.testing.assert_array_equal(Q[:, :, a, a], np.zeros((2, 2)))
    assert Q[0, 0][grid.origin] == 10.0 and Q[0, 1][grid.origin] == 0.0
    ones = make_load(LoadSpec("pot2", amplitude=0.5), grid)
    assert np.all(ones[0, 1] == ones[1, 1])
    diag = make_load(LoadSpec("pot1", pattern="diagonal", weights=(2.0, 9.0, 9.0, 3.0)), grid)
    assert diag[0, 0][grid.origin] == pytest.approx(2.4)
    assert diag[1, 1][grid.origin] == pytest.approx(3.6)
    assert not np.any(diag[0, 1])
    general = make_load(LoadSpec("pot1", pattern="general", weights=(1.0, 2.0, 3.0, 4.0)), grid)
    np.testing.assert_allclose(general[:, :, grid.origin[0], grid.origin[1]],
                               1.2 * np.array([[1, 2], [3, 4]]))


def test_custom_samples(tmp_path):
    grid = make_grid(2.0, 8)
    q = np.zeros((8, 8))
    q[4, 5] = 2.0
    np.save(tmp_path / "q.npy", q)
    Q = make_load(LoadSpec("custom-samples", samples_path=str(tmp_path / "q.npy"),
                           pattern="identity"), grid)
    assert Q[1, 1, 4, 5] == 2.0 and Q[0, 1, 4, 5] == 0.0
    with pytest.raises(ConfigError):
        make_load(LoadSpec("custom-samples"), grid)


def _dataset(grid, kind="backscatter"):
    Q = pot2_load(grid, 0.2)
    lame = LameParams(2.0, 1.0)
    if kind == "backscatter":
        return synthesize_backscatter(Q, grid, lame, 1.0, part="linear")
    return synthesize_fixed_angle(Q, (1.0, 0.0), grid, lame, 1.0, part="linear")


@pytest.mark.parametrize("kind", ["backscatter", "fixed-angle"])
def test_noise_per_datum_scaling_and_determinism(kind):
    grid = make_grid(2.0, 8)
    data = _dataset(grid, kind)
    same = add_noise(data, 0.0, seed=1)
    for a, b in zip(data.vectors(), same.vectors()):
        assert a.tobytes() == b.tobytes()
    noisy = add_noise(data, 0.05, seed=1)
    m = data.measured
    for a, b in zip(data.vectors(), noisy.vectors()):
        size = np.linalg.norm(a[m], axis=-1)
        rel = np.linalg.norm(b[m] - a[m], axis=-1)[size > 0] / size[size > 0]
        np.testing.assert_allclose(rel, 0.05, rtol=1e-12)
        # a vanishing datum has no relative perturbation to carry
        np.testing.assert_array_equal(b[m][size == 0], 0)
        assert not np.any(b[~m])
    again = add_noise(data, 0.05, seed=1)
    other = add_noise(data, 0.05, seed=2)
    for a, b, c in zip(noisy.vectors(), again.vectors(), other.vectors()):
        assert a.tobytes() == b.tobytes() and a.tobytes() != c.tobytes()
    assert noisy.provenance == "synthetic+noise" and noisy.noise_level == 0.05
    assert data.provenance == "synthetic"


def test_global_noise_norm():
    grid = make_grid(2.0, 8)
    data = _dataset(grid)
    noisy = add_noise(data, 0.1, seed=5, mode="global")
    m = data.measured
    diff = np.sqrt(sum(np.sum(np.abs(b[m] - a[m]) ** 2)
                       for a, b in zip(data.vectors(), noisy.vectors())))
    total = np.sqrt(sum(np.sum(np.abs(a[m]) ** 2) for a in data.vectors()))
    assert abs(diff / total - 0.1) < 1e-12
    with pytest.raises(ValueError):
        add_noise(data, 0.1, 0, mode="burst")
    with pytest.raises(ValueError):
        add_noise(data, 1.5, 0)


def test_config_parsing_and_overrides(tmp_path):
    text = """
    # comment line
    lam = -1.1   # trailing comment
    N = 16
    kind = fixed-angle
    theta = 0, 1
    load = pot1
    load_weights = 1, 2, 3, 4
    real_load = false
    """
    path = tmp_path / "c.cfg"
    path.write_text(text, encoding="utf-8")
    cfg = load_config(path, {"N": "8"})
    assert cfg.lam == -1.1 and cfg.N == 8 and cfg.kind == "fixed-angle"
    assert cfg.theta == (0.0, 1.0) and cfg.load.name == "pot1"
    assert cfg.load.weights == (1.0, 2.0, 3.0, 4.0) and cfg.real_load is False
    assert cfg.chi_radius == 1.0
    assert parse_config_text("a = b = c\n") == {"a": "b = c"}


@pytest.mark.parametrize("entries", [
    {"bogus": "1"}, {"N": "7"}, {"N": "abc"}, {"kind": "sideways"}, {"lam": "-3"},
    {"theta": "0, 0"}, {"noise": "2"}, {"load": "pot9"}, {"real_load": "maybe"},
    {"load_weights": "1, 2"},
])
def test_config_errors(entries):
    with pytest.raises(ConfigError):
        build_config(entries)


def test_config_text_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config_text("just words\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_digest_tracks_only_result_keys():
    base = ExperimentConfig()
    assert base.digest() == dataclasses.replace(base, output_dir="elsewhere", workers=3).digest()
    assert base.digest() != dataclasses.replace(base, seed=1).digest()
    assert base.digest() != build_config({"load_amplitude": "0.5"}).digest()


def test_synthesize_dataset_dispatch():
    cfg = build_config({"N": "8", "kind": "fixed-angle"})
    data = synthesize_dataset(np.zeros((2, 2, 8, 8), complex), cfg, part="linear")
    assert data.theta == (1.0, 0.0) and data.entry_count == 49
