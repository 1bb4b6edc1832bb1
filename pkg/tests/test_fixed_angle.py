import numpy as np
import pytest

from elscat import LameParams, make_grid, nuft_eval
from elscat.fixed_angle import (FixedAngleDataset, born_fixed_angle, column_sources,
                                error_term_fixed_angle, ewald_params, incident_polarization,
                                iterate_fixed_angle, quadrant, regime_for, signed_directions,
                                synthesize_fixed_angle, unit_k_regime_difference, v_inf_fixed)
from elscat.reconstruct import IterationOptions

from conftest import pot2_load


def test_ewald_examples():
    p = ewald_params((-1.0, 0.0), (1.0, 0.0), 2.0)
    assert (p.omega1, p.zeta1, p.zeta2) == (0.5, (-1.0, 0.0), (-1.0, 0.0))
    assert abs(p.omega2 - 1 / 3) < 1e-15
    q = ewald_params((-2.0, 0.0), (1.0, 0.0), 1.0)
    assert (q.omega1, q.omega2, q.zeta1, q.zeta2) == (1.0, 1.0, (-1.0, 0.0), (-1.0, 0.0))
    with pytest.raises(ValueError):
        ewald_params((1.0, 0.0), (1.0, 0.0), 2.0)
    with pytest.raises(ValueError):
        ewald_params((-0.1, 5.0), (1.0, 0.0), 0.5)


def test_ewald_representation_property(rng):
    for _ in range(500):
        K = rng.uniform(1, 5)
        d = rng.standard_normal(2)
        d /= np.linalg.norm(d)
        xi = rng.standard_normal(2) * rng.uniform(0.1, 20)
        if xi @ d >= 0:
            xi = -xi
        p = ewald_params(xi, d, K)
        z1, z2 = np.array(p.zeta1), np.array(p.zeta2)
        s = np.linalg.norm(xi)
        assert np.linalg.norm(xi - p.omega1 * (z1 - d)) <= 1e-10 * s
        assert np.linalg.norm(xi - p.omega2 * (K * z2 - d)) <= 1e-10 * s
        assert abs(np.linalg.norm(z1) - 1) < 1e-12 and abs(np.linalg.norm(z2) - 1) < 1e-12
        assert z1 @ z2 >= 1 / K - 1e-10
        assert p.omega1 > 0 and p.omega2 > 0


def test_regimes_and_polarizations():
    assert regime_for(LameParams(2.0, 1.0)) == "p"
    assert regime_for(LameParams(-1.1, 1.0)) == "s"
    assert regime_for(LameParams(-1.0, 1.0)) == "p"
    assert regime_for(LameParams(-1.0, 1.0), "s") == "s"
    d = np.array([0.6, 0.8])
    np.testing.assert_allclose(incident_polarization(d, "p"), d)
    assert abs(incident_polarization(d, "s") @ d) < 1e-15


def test_quadrants_and_column_sources():
    theta = np.array([1.0, 0.0])
    assert quadrant((1.0, 1.0), theta) == 1
    assert quadrant((-1.0, 1.0), theta) == 2
    assert quadrant((-1.0, -1.0), theta) == 3
    assert quadrant((1.0, -1.0), theta) == 4
    assert quadrant((0.0, 2.0), theta) == 0 and quadrant((3.0, 0.0), theta) == 0
    dirs = signed_directions(theta)
    for regime in ("p", "s"):
        for xi in ((1.0, 1.0), (-1.0, 1.0), (-1.0, -2.0), (3.0, -1.0)):
            ca, cb = column_sources(xi, theta, regime)
            assert np.dot(xi, dirs[ca]) < 0 and np.dot(xi, dirs[cb]) < 0
            pa = incident_polarization(dirs[ca], regime)
            pb = incident_polarization(dirs[cb], regime)
            assert abs(abs(pa @ theta) - 1) < 1e-12 and abs(pb @ theta) < 1e-12


@pytest.mark.parametrize("lam,regime", [(2.0, "p"), (-1.1, "s")])
def test_linearized_vector_recovers_column(lam, regime, grid16):
    lame = LameParams(lam, 1.0)
    rng = np.random.default_rng(3)
    W = rng.standard_normal((2, 2))
    Q = (W[:, :, None, None] * pot2_load(grid16, 1.0, "identity")[0, 0]).astype(complex)
    xi = np.array([-1.3, 2.2])
    d = np.array([np.cos(0.4), np.sin(0.4)])
    v = v_inf_fixed(xi, d, regime, Q, lame, grid16, 1.0, scattered=False)
    pol = incident_polarization(d, regime)
    np.testing.assert_allclose(v.linear, nuft_eval(Q, grid16, xi) @ pol, atol=1e-14)
    zero = v_inf_fixed(xi, d, regime, np.zeros_like(Q), lame, grid16, 1.0)
    assert not np.any(zero.total)


@pytest.mark.parametrize("lam", [2.0, -1.1, -1.0])
@pytest.mark.parametrize("theta", [(1.0, 0.0), (np.cos(0.7), np.sin(0.7))])
def test_linear_level_inversion_is_exact(lam, theta, grid16):
    lame = LameParams(lam, 1.0)
    rng = np.random.default_rng(8)
    W = rng.standard_normal((2, 2))
    Q = (W[:, :, None, None] * pot2_load(grid16, 1.0, "identity")[0, 0]).astype(complex)
    data = synthesize_fixed_angle(Q, theta, grid16, lame, 1.0, part="linear")
    assert np.max(np.abs(born_fixed_angle(data, 1.0) - Q)) < 1e-10


def test_zero_inputs(grid16, lame2):
    zero = np.zeros((2, 2, 16, 16), complex)
    data = synthesize_fixed_angle(zero, (1.0, 0.0), grid16, lame2, 1.0)
    assert not np.any(data.va) and not np.any(data.vb)
    assert not np.any(born_fixed_angle(data, 1.0))
    assert not np.any(error_term_fixed_angle(zero, (1.0, 0.0), lame2, grid16, 1.0))
    res = iterate_fixed_angle(zero, (1.0, 0.0), lame2, grid16, 1.0,
                              options=IterationOptions(M=2))
    assert all(not np.any(q) for q in res.iterates)


def test_regime_mismatch_rejected(grid16):
    lame = LameParams(2.0, 1.0)
    with pytest.raises(ValueError):
        synthesize_fixed_angle(np.zeros((2, 2, 16, 16)), (1.0, 0.0), grid16, lame, 1.0,
                               regime="s")


def test_axis_points_are_excluded(grid16, lame2):
    data = synthesize_fixed_angle(pot2_load(grid16, 0.1), (1.0, 0.0), grid16, lame2, 1.0,
                                  part="linear")
    o = grid16.origin
    assert not data.measured[o[0], :].any() and not data.measured[:, o[1]].any()
    assert data.entry_count == (16 - 1) ** 2
    with pytest.raises(ValueError):
        partial = data.measured.copy()
        partial[0, 0] = False
        born_fixed_angle(FixedAngleDataset(
            data.grid, data.lame, data.theta, data.regime, data.va, data.vb, data.dir_a,
            data.dir_b, data.quadrant, partial), 1.0)


@pytest.mark.parametrize("lam", [2.0, -1.1])
def test_error_term_is_quadratic(lam, grid16):
    lame = LameParams(lam, 1.0)
    Q = pot2_load(grid16)
    norms = [np.linalg.norm(error_term_fixed_angle(e * Q, (1.0, 0.0), lame, grid16, 1.0))
             for e in (0.2, 0.1, 0.05)]
    for a, b in zip(norms, norms[1:]):
        assert 4 / 1.5 <= a / b <= 4 * 1.5


def test_born_minus_error_term_reproduces_load(grid16, lame2):
    Q = pot2_load(grid16, 0.5)
    data = synthesize_fixed_angle(Q, (1.0, 0.0), grid16, lame2, 1.0)
    QB = born_fixed_angle(data, 1.0)
    E = error_term_fixed_angle(Q, (1.0, 0.0), lame2, grid16, 1.0)
    inside = grid16.ball_mask(1.0)
    assert np.max(np.abs((QB - E - Q)[..., inside])) < 1e-8


def test_unit_ratio_regimes_agree_at_linear_level():
    grid = make_grid(2.0, 8)
    lame = LameParams(-1.0, 1.0)
    Q = pot2_load(grid, 0.5)
    assert unit_k_regime_difference(Q, (1.0, 0.0), lame, grid, 1.0, part="linear") < 1e-12
    with pytest.raises(ValueError):
        unit_k_regime_difference(Q, (1.0, 0.0), LameParams(2.0, 1.0), grid, 1.0)
