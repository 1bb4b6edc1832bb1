"""Independent reference computations used to cross-check the main solvers.

None of this shares kernel code with :mod:`elscat.forward`.  The scalar
Helmholtz reference takes its Hankel and Bessel values from scipy, builds
the truncated-kernel symbol by radial Gauss-Legendre quadrature instead of
the closed form, and solves the discrete Lippmann-Schwinger system with a
dense direct factorisation instead of a Krylov method.
"""

from __future__ import annotations

import numpy as np
from scipy.special import hankel1, jv

from .forward import LameParams, PlaneWave, resolvent_apply, pointwise_matvec
from .grid import GridSpec, dft_forward, dft_inverse


def brute_force_dft(f, grid: GridSpec) -> np.ndarray:
    """Lattice coefficients by direct O(N^4) summation."""
    f = np.asarray(f)
    x = grid.nodes
    xi = grid.freqs
    e = np.exp(-1j * np.outer(xi, x))
    return (grid.h ** 2 / (2 * grid.R)) * np.einsum("ja,ab,kb->jk", e, f, e)


def apply_lame_operator(v, lame: LameParams, c: float, grid: GridSpec) -> np.ndarray:
    """Spectral ``mu Delta v + (lambda + mu) grad div v + c^2 v`` of a periodic field."""
    v = np.asarray(v)
    vh = dft_forward(v, grid)
    k1, k2 = grid.freq_mesh
    div = k1 * vh[0] + k2 * vh[1]
    s2 = k1 * k1 + k2 * k2
    lap = -lame.mu * s2
    out = np.stack([
        (lap + c * c) * vh[0] - (lame.lam + lame.mu) * k1 * div,
        (lap + c * c) * vh[1] - (lame.lam + lame.mu) * k2 * div,
    ])
    return dft_inverse(out, grid)


def truncated_kernel_quadrature(s, k: float, rho: float, nodes: int = 400) -> np.ndarray:
    """``int_{|x|<rho} (i/4) H0(k|x|) exp(-i xi.x) dx`` by radial quadrature.

    Uses ``2 pi int_0^rho (i/4) H0(kr) J0(sr) r dr`` with the substitution
    ``r = rho t^2`` to tame the logarithmic singularity at the origin.
    """
    s = np.asarray(s, dtype=float)
    t, w = np.polynomial.legendre.leggauss(nodes)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    r = rho * t * t
    jac = 2.0 * rho * t
    flat = s.ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    integrand = hankel1(0, k * r)[None, :] * jv(0, np.outer(uniq, r)) * (r * jac)[None, :]
    vals = 2.0 * np.pi * 0.25j * (integrand @ w)
    return vals[inv].reshape(s.shape)


def helmholtz_ls_reference(q, k: float, direction, grid: GridSpec, support_radius: float,
                           mu: float = 1.0, amplitude: complex = 1.0):
    """Scattered field of ``Delta u + k^2 u = (q / mu) u`` for an incident plane wave.

    Solves ``w = G[(q/mu)(u_i + w)]`` with the outgoing resolvent ``G`` of
    ``Delta + k^2`` realised by the disc-truncated kernel of radius
    ``2 R_supp`` on the periodic box.  The discrete system is assembled
    column by column and solved directly, which is practical up to N = 32.

    Parameters
    ----------
    q : ndarray, shape (N, N)
        Scalar load.
    k : float
        Wavenumber.
    direction : array_like
        Unit propagation direction of ``u_i = amplitude * exp(i k d.x)``.
    """
    q = np.asarray(q, dtype=np.complex128)
    N = grid.N
    rho = 2.0 * support_radius
    k1, k2 = grid.freq_mesh
    s = np.hypot(k1, k2)
    symbol = -truncated_kernel_quadrature(s, k, rho)
    coef = q.ravel() / mu
    x1, x2 = grid.mesh
    d = np.asarray(direction, dtype=float)
    ui = amplitude * np.exp(1j * k * (d[0] * x1 + d[1] * x2))

    def G(f):
        return dft_inverse(symbol * dft_forward(f, grid), grid)

    active = np.flatnonzero(coef)
    # w = G(coef * (ui + w)); only the values of w on supp q feed back, so
    # the square system lives on the support nodes.
    cols = np.empty((N * N, active.size), dtype=np.complex128)
    unit = np.zeros(N * N, dtype=np.complex128)
    for col, idx in enumerate(active):
        unit[idx] = coef[idx]
        cols[:, col] = G(unit.reshape(N, N)).ravel()
        unit[idx] = 0.0
    A = np.eye(active.size) - cols[active, :]
    rhs = G((coef * ui.ravel()).reshape(N, N)).ravel()
    w_active = np.linalg.solve(A, rhs[active])
    w = rhs + cols @ w_active
    return w.reshape(N, N)


def born_series_oracle(Q, wave: PlaneWave, c: float, lame: LameParams, grid: GridSpec,
                       support_radius: float, order: int = 1) -> np.ndarray:
    """Truncated Neumann series ``v1 = R(Q u_i)``, ``v2 = v1 + R(Q v1)``."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    Q = np.asarray(Q, dtype=np.complex128)
    v1 = resolvent_apply(pointwise_matvec(Q, wave.field(grid)), lame, c, grid, support_radius)
    if order == 1:
        return v1
    return v1 + resolvent_apply(pointwise_matvec(Q, v1), lame, c, grid, support_radius)
