import numpy as np
import pytest

from elscat import LameParams, PlaneWave, make_grid
from elscat.forward import channel_energy, solve_lippmann_schwinger
from elscat.grid import dft_inverse
from elscat.oracles import (apply_lame_operator, born_series_oracle, brute_force_dft,
                            helmholtz_ls_reference)

from conftest import pot2_load


def _single_mode(grid, a, b, pol):
    c = np.zeros((2, grid.N, grid.N), complex)
    c[:, a, b] = pol
    return dft_inverse(c, grid)


@pytest.mark.parametrize("lam", [2.0, -1.1])
def test_lame_operator_single_mode_multipliers(lam):
    grid = make_grid(2.0, 16)
    lame = LameParams(lam, 1.0)
    omega = 1.3
    a, b = 11, 5
    xi = np.array([grid.freqs[a], grid.freqs[b]])
    s2 = xi @ xi
    u = xi / np.sqrt(s2)
    curl_free = _single_mode(grid, a, b, u)
    div_free = _single_mode(grid, a, b, (-u[1], u[0]))
    np.testing.assert_allclose(apply_lame_operator(curl_free, lame, omega, grid),
                               (-(2 + lam) * s2 + omega ** 2) * curl_free, atol=1e-12)
    np.testing.assert_allclose(apply_lame_operator(div_free, lame, omega, grid),
                               (-s2 + omega ** 2) * div_free, atol=1e-12)
    assert not np.any(apply_lame_operator(np.zeros((2, 16, 16)), lame, omega, grid))


def test_brute_force_dft_constant_mode():
    grid = make_grid(1.0, 4)
    c = brute_force_dft(np.full((4, 4), 0.5), grid)
    assert abs(c[grid.origin] - 1.0) < 1e-14


def test_helmholtz_reference_zero_and_continuity_in_k():
    grid = make_grid(2.0, 16)
    zero = helmholtz_ls_reference(np.zeros((16, 16)), 2.0, (1.0, 0.0), grid, 1.0)
    assert not np.any(zero)
    q = pot2_load(grid)[0, 0].real
    w1 = helmholtz_ls_reference(q, 2.0, (1.0, 0.0), grid, 1.0)
    w2 = helmholtz_ls_reference(q, 4.0, (1.0, 0.0), grid, 1.0)
    w3 = helmholtz_ls_reference(q, 4.0 + 1e-6, (1.0, 0.0), grid, 1.0)
    assert np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))
    assert np.linalg.norm(w3 - w2) < 1e-4 * np.linalg.norm(w2)


def test_born_series_zero_and_order_check():
    grid = make_grid(2.0, 16)
    lame = LameParams(2.0, 1.0)
    wave = PlaneWave.p_wave((1.0, 0.0), 2.0)
    c = channel_energy("pp", 2.0, lame)
    assert not np.any(born_series_oracle(np.zeros((2, 2, 16, 16)), wave, c, lame, grid, 1.0, 2))
    with pytest.raises(ValueError):
        born_series_oracle(np.zeros((2, 2, 16, 16)), wave, c, lame, grid, 1.0, 3)
    Q = pot2_load(grid)
    rem1, rem2 = [], []
    for eps in (0.1, 0.05):
        v = solve_lippmann_schwinger(eps * Q, wave, c, lame, grid, 1.0).v
        rem1.append(np.linalg.norm(v - born_series_oracle(eps * Q, wave, c, lame, grid, 1.0, 1)))
        rem2.append(np.linalg.norm(v - born_series_oracle(eps * Q, wave, c, lame, grid, 1.0, 2)))
    assert 4 / 1.5 <= rem1[0] / rem1[1] <= 4 * 1.5
    assert 8 / 1.5 <= rem2[0] / rem2[1] <= 8 * 1.5
