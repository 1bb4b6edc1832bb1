import numpy as np
import pytest
import scipy.special as sps

from elscat.special import bessel_j01, bessel_jy01, hankel1_01


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_bessel_matches_scipy_across_switch(backend):
    x = np.concatenate([np.geomspace(1e-8, 1, 200), np.linspace(1, 200, 5000)])
    got = bessel_jy01(x, backend=backend)
    for g, ref in zip(got, (sps.j0(x), sps.j1(x), sps.y0(x), sps.y1(x))):
        scale = np.maximum(1.0, np.abs(ref))
        assert np.max(np.abs(g - ref) / scale) < 1e-10


def test_backends_agree_bitwise_close():
    x = np.linspace(0.01, 50, 999)
    a = bessel_jy01(x, backend="numba")
    b = bessel_jy01(x, backend="numpy")
    for u, v in zip(a, b):
        np.testing.assert_allclose(u, v, rtol=1e-13, atol=1e-15)


def test_j01_allows_origin_and_keeps_shape():
    x = np.array([[0.0, 1.0], [2.5, 30.0]])
    j0, j1 = bessel_j01(x)
    assert j0.shape == x.shape
    assert j0[0, 0] == 1.0 and j1[0, 0] == 0.0
    np.testing.assert_allclose(j0, sps.j0(x), atol=1e-12)
    np.testing.assert_allclose(j1, sps.j1(x), atol=1e-12)


def test_hankel_first_kind():
    x = np.array([0.3, 4.0, 17.0])
    h0, h1 = hankel1_01(x)
    np.testing.assert_allclose(h0, sps.hankel1(0, x), rtol=1e-11)
    np.testing.assert_allclose(h1, sps.hankel1(1, x), rtol=1e-11)


def test_rejects_nonpositive_arguments():
    with pytest.raises(ValueError):
        bessel_jy01([1.0, 0.0])
    with pytest.raises(ValueError):
        bessel_j01([-1.0])
    with pytest.raises(ValueError):
        bessel_jy01([1.0], backend="fortran")
