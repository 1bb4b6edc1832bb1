import numpy as np
import pytest

from elscat import make_grid
from elscat.grid import dft_forward
from elscat.reconstruct import (IterationOptions, fill_unmeasured, iterate_refinement,
                                load_from_fourier, reconstruction_error, relative_l2_error)
from elscat.forward import SolverError

from conftest import pot2_load


def test_error_metric_examples(grid16):
    Q = pot2_load(grid16)
    assert reconstruction_error(Q, Q, grid16) == 0
    Qn = np.zeros_like(Q)
    Qn[1, 0, 5, 7] = 1.0
    assert reconstruction_error(np.zeros_like(Q), Qn, grid16) == grid16.h
    with pytest.raises(ValueError):
        reconstruction_error(Q, Q[..., :8, :8], grid16)


def test_error_metric_takes_the_component_maximum(grid16):
    Q = np.zeros((2, 2, 16, 16))
    base = Q.copy()
    base[0, 0, 3, 3] = 2.0
    small = base.copy()
    small[1, 0, 4, 4] = 1.0
    big = base.copy()
    big[1, 0, 4, 4] = 3.0
    e0 = reconstruction_error(Q, base, grid16)
    assert reconstruction_error(Q, small, grid16) == e0
    assert reconstruction_error(Q, big, grid16) > e0


def test_metric_ignores_imaginary_parts(grid16):
    Q = pot2_load(grid16).real
    assert reconstruction_error(Q, Q + 0.3j, grid16) == 0
    assert relative_l2_error(Q, Q + 0.3j, grid16) == 0


@pytest.mark.parametrize("method", ["support", "neighbors", "zero"])
def test_fill_methods_on_missing_origin(method, grid16):
    Q = pot2_load(grid16)[0, 0]
    coeffs = dft_forward(Q, grid16)
    measured = np.ones((16, 16), bool)
    measured[grid16.origin] = False
    filled = fill_unmeasured(coeffs, measured, grid16, 1.0, method)
    np.testing.assert_array_equal(filled[measured], coeffs[measured])
    err = abs(filled[grid16.origin] - coeffs[grid16.origin]) / abs(coeffs[grid16.origin])
    if method == "support":
        assert err < 1e-8
    elif method == "zero":
        assert filled[grid16.origin] == 0
    else:
        assert err < 1.0


def test_support_fill_recovers_the_axes(grid16):
    Q = pot2_load(grid16)
    coeffs = dft_forward(Q, grid16)
    measured = np.ones((16, 16), bool)
    measured[grid16.origin[0], :] = False
    measured[:, grid16.origin[1]] = False
    filled = fill_unmeasured(coeffs, measured, grid16, 1.0)
    assert np.max(np.abs(filled - coeffs)) < 1e-6 * np.max(np.abs(coeffs))
    with pytest.raises(ValueError):
        fill_unmeasured(coeffs, measured, grid16, 1.0, "spline")


def test_load_from_fourier_inverts_exact_transform(grid16):
    Q = pot2_load(grid16)
    qhat = dft_forward(Q, grid16) * (2 * grid16.R) / (2 * np.pi) ** 2
    np.testing.assert_allclose(load_from_fourier(qhat, np.ones((16, 16), bool), grid16, 1.0), Q,
                               atol=1e-12)


def test_refinement_loop_bookkeeping(grid16):
    Q = pot2_load(grid16, 0.2).real.astype(complex)

    def contraction(Qn):
        return 0.5 * (Qn - Q)

    res = iterate_refinement(Q, contraction, grid16, 1.0, IterationOptions(M=3), true_load=Q)
    assert len(res.iterates) == 4 and len(res.errors) == 4 and len(res.update_norms) == 3
    assert res.errors[0] == 0 and not res.failed


def test_refinement_loop_stops_on_solver_failure(grid16):
    def broken(Qn):
        raise SolverError("no convergence", 1.0, 5)

    res = iterate_refinement(pot2_load(grid16), broken, grid16, 1.0, IterationOptions(M=3))
    assert res.failed and len(res.iterates) == 1 and "no convergence" in res.message


def test_early_stop_and_option_validation(grid16):
    Q = pot2_load(grid16)
    res = iterate_refinement(Q, lambda Qn: np.zeros_like(Qn), grid16, 1.0,
                             IterationOptions(M=5, early_stop=1e-3))
    assert len(res.iterates) == 2
    with pytest.raises(ValueError):
        IterationOptions(M=0)
    with pytest.raises(ValueError):
        IterationOptions(fill="magic")
