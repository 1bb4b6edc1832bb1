"""Square grids, the lattice DFT and the pointwise projectors.

Conventions
-----------
The continuous transform is ``f^(xi) = (2 pi)^-2 * int f(x) exp(-i xi.x) dx``.
On ``G_R = [-R, R)^2`` with ``N`` nodes per axis the nodes are ``x_j = j h``
with ``h = 2R / N`` and ``-N/2 <= j < N/2``; the frequency lattice is
``xi_j = pi j / R``.  Arrays are stored in natural (increasing) index order
with ``indexing="ij"``, so ``values[..., a, b]`` sits at ``(x_a, x_b)``.

The lattice coefficients are the coordinates in the orthonormal basis
``phi_j(x) = exp(i xi_j . x) / (2R)``:
``c_j = h^2 / (2R) * sum_n f(x_n) exp(-i xi_j . x_n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ._accel import USE_NUMBA, njit

UNIT_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Square grid on ``[-R, R)^2`` with ``N`` nodes per axis."""

    R: float
    N: int

    @property
    def h(self) -> float:
        return 2.0 * self.R / self.N

    @cached_property
    def index(self) -> np.ndarray:
        return np.arange(-self.N // 2, self.N // 2)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.index * self.h

    @cached_property
    def freqs(self) -> np.ndarray:
        return np.pi * self.index / self.R

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.nodes, self.nodes, indexing="ij")

    @cached_property
    def freq_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.freqs, self.freqs, indexing="ij")

    @cached_property
    def radius(self) -> np.ndarray:
        x1, x2 = self.mesh
        return np.hypot(x1, x2)

    def ball_mask(self, radius: float) -> np.ndarray:
        """Nodal indicator of the open ball ``|x| < radius``."""
        return self.radius < radius

    @property
    def origin(self) -> tuple[int, int]:
        """Array position of the lattice index ``(0, 0)``."""
        return self.N // 2, self.N // 2


def make_grid(R: float, N: int) -> GridSpec:
    """Build a :class:`GridSpec`, rejecting invalid sizes.

    >>> make_grid(2.0, 128).h
    0.03125
    """
    if not np.isfinite(R) or R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    if int(N) != N or N <= 0 or N % 2:
        raise ValueError(f"N must be a positive even integer, got {N}")
    return GridSpec(float(R), int(N))


def _check_shape(values: np.ndarray, grid: GridSpec) -> None:
    if values.shape[-2:] != (grid.N, grid.N):
        raise ValueError(
            f"field shape {values.shape} does not match the {grid.N}x{grid.N} grid"
        )


def dft_forward(values, grid: GridSpec) -> np.ndarray:
    """Lattice coefficients of nodal samples over the last two axes."""
    values = np.asarray(values)
    _check_shape(values, grid)
    axes = (-2, -1)
    raw = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(values, axes=axes), axes=axes), axes=axes)
    return raw * (grid.h ** 2 / (2.0 * grid.R))


def dft_inverse(coeffs, grid: GridSpec) -> np.ndarray:
    """Nodal values ``sum_j c_j phi_j(x_n)`` from lattice coefficients."""
    coeffs = np.asarray(coeffs)
    _check_shape(coeffs, grid)
    axes = (-2, -1)
    raw = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(coeffs, axes=axes), axes=axes), axes=axes)
    return raw * (grid.N ** 2 / (2.0 * grid.R))


def check_unit(zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (2,) or abs(np.hypot(*zeta) - 1.0) > UNIT_TOL:
        raise ValueError(f"expected a unit 2-vector, got {zeta}")
    return zeta


def project_dir(zeta, v) -> np.ndarray:
    """Rank-one projector ``(v . zeta) zeta`` onto the line spanned by ``zeta``."""
    zeta = check_unit(zeta)
    v = np.asarray(v)
    return (v @ zeta) * zeta


def rot90(theta) -> np.ndarray:
    """Counter-clockwise quarter turn, the fixed choice of ``theta_perp``."""
    theta = np.asarray(theta, dtype=float)
    return np.array([-theta[1], theta[0]])


def leray_apply(f, grid: GridSpec, part: str = "gradient") -> np.ndarray:
    """Split a vector field into its gradient or solenoidal part.

    The projector ``xi xi^T / |xi|^2`` acts on every nonzero lattice
    frequency; the constant mode is assigned wholly to the gradient part.

    Parameters
    ----------
    f : ndarray, shape (2, N, N)
        Nodal values of the field.
    grid : GridSpec
    part : {"gradient", "solenoidal"}

    Returns
    -------
    ndarray, shape (2, N, N)
    """
    if part not in ("gradient", "solenoidal"):
        raise ValueError(f"part must be 'gradient' or 'solenoidal', got {part!r}")
    f = np.asarray(f)
    if f.shape[0] != 2:
        raise ValueError("expected a vector field with leading axis of length 2")
    c = dft_forward(f, grid)
    k1, k2 = grid.freq_mesh
    s2 = k1 * k1 + k2 * k2
    s2_safe = np.where(s2 == 0, 1.0, s2)
    dot = (k1 * c[0] + k2 * c[1]) / s2_safe
    grad = np.stack([k1 * dot, k2 * dot])
    o = grid.origin
    grad[:, o[0], o[1]] = c[:, o[0], o[1]]
    out = grad if part == "gradient" else c - grad
    return dft_inverse(out, grid)


@njit
def _nuft_loop(f, x, xi):
    """Direct double sum ``sum_n f[c, a, b] exp(-i (xi1 x_a + xi2 x_b))``."""
    ncomp = f.shape[0]
    n = x.size
    m = xi.shape[0]
    out = np.zeros((ncomp, m), dtype=np.complex128)
    for p in range(m):
        e1 = np.exp(-1j * xi[p, 0] * x)
        e2 = np.exp(-1j * xi[p, 1] * x)
        for c in range(ncomp):
            acc = 0.0 + 0.0j
            for a in range(n):
                row = 0.0 + 0.0j
                for b in range(n):
                    row += f[c, a, b] * e2[b]
                acc += e1[a] * row
            out[c, p] = acc
    return out


def _nuft_numpy(f, x, xi):
    e1 = np.exp(-1j * np.outer(xi[:, 0], x))
    e2 = np.exp(-1j * np.outer(xi[:, 1], x))
    return np.einsum("pa,cab,pb->cp", e1, f, e2, optimize=True)


def nuft_eval(f, grid: GridSpec, xi, backend: str | None = None) -> np.ndarray:
    """Trapezoid-rule Fourier transform of nodal samples at arbitrary frequencies.

    Evaluates ``(2 pi)^-2 h^2 sum_n f(x_n) exp(-i xi . x_n)``.  At a lattice
    frequency this equals ``2R / (2 pi)^2`` times the lattice coefficient.

    Parameters
    ----------
    f : ndarray, shape (..., N, N)
        Field samples; leading axes are components.
    grid : GridSpec
    xi : array_like, shape (2,) or (M, 2)
        Frequencies.
    backend : {"numba", "numpy"}, optional

    Returns
    -------
    ndarray
        Shape ``f.shape[:-2]`` for a single frequency, else
        ``f.shape[:-2] + (M,)``.
    """
    f = np.asarray(f)
    _check_shape(f, grid)
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    xi2 = np.atleast_2d(xi)
    lead = f.shape[:-2]
    flat = np.ascontiguousarray(f.reshape((-1, grid.N, grid.N)).astype(np.complex128))
    if backend is None:
        backend = "numba" if USE_NUMBA else "numpy"
    if backend == "numba":
        raw = _nuft_loop(flat, np.ascontiguousarray(grid.nodes), np.ascontiguousarray(xi2))
    elif backend == "numpy":
        raw = _nuft_numpy(flat, grid.nodes, xi2)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    raw = raw * (grid.h ** 2 / (4.0 * np.pi ** 2))
    out = raw.reshape(lead + (xi2.shape[0],))
    return out[..., 0] if single else out


def sobolev_norm(f, grid: GridSpec, eta: float) -> float:
    """Discrete ``H^eta`` norm ``(sum_j (1+|j|)^(2 eta) |c_j|^2)^(1/2)``."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    c = dft_forward(f, grid)
    j1, j2 = np.meshgrid(grid.index, grid.index, indexing="ij")
    weight = (1.0 + np.hypot(j1, j2)) ** (2.0 * eta)
    return float(np.sqrt(np.sum(weight * np.abs(c) ** 2)))


def l2_norm(f, grid: GridSpec) -> float:
    """Nodal ``L^2(G_R)`` norm ``(h^2 sum |f|^2)^(1/2)`` over all components."""
    return float(grid.h * np.sqrt(np.sum(np.abs(np.asarray(f)) ** 2)))
