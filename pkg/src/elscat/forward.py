"""Forward elastic scattering: outgoing resolvent, Lippmann-Schwinger solver, far fields.

The resolvent ``R = (Delta* + c^2 + i0)^-1`` of the Lame operator
``Delta* = mu Delta + (lambda + mu) grad div`` is applied as an exact
Fourier multiplier: convolution with the outgoing Green tensor truncated to
the disc ``|x| < rho``.  With ``rho = 2 R_supp`` and a box half-width
``R >= 2 R_supp`` the periodic convolution coincides with the free-space one
for every pair of points in the support ball, so the Lippmann-Schwinger
iteration only ever reads exact values.

The truncated scalar kernel ``G_k = (i/4) H0(k|x|) 1{|x| < rho}`` has the
closed-form transform (no ``2 pi`` factor)::

    M_k(s) = [1 - (i pi rho / 2) (k H1(k rho) J0(s rho) - s H0(k rho) J1(s rho))] / (s^2 - k^2)

with a removable singularity at ``s = k``.  Since ``Green = -(1/mu) G_ks I +
c^-2 grad grad (G_ks - G_kp)``, the tensor symbol is
``-(1/mu) M_ks I + c^-2 xi xi^T (M_ks - M_kp)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, gmres

from ._accel import USE_NUMBA, njit
from .grid import GridSpec, check_unit, nuft_eval, rot90
from .special import bessel_j01, bessel_jy01

logger = logging.getLogger(__name__)

# Relative half-width of the window around s = k where the symbol switches
# to its second-order Taylor expansion.
RESONANCE_WINDOW = 1e-4


@dataclass(frozen=True)
class LameParams:
    """Lame parameters with the strong-ellipticity check.

    Attributes
    ----------
    lam, mu : float
        Require ``mu > 0`` and ``2 mu + lam > 0``.
    """

    lam: float
    mu: float

    def __post_init__(self):
        if not (self.mu > 0 and 2 * self.mu + self.lam > 0):
            raise ValueError(
                f"Lame parameters must satisfy mu > 0 and 2mu + lambda > 0 "
                f"(got lambda={self.lam}, mu={self.mu})"
            )

    @property
    def p_modulus(self) -> float:
        return 2.0 * self.mu + self.lam

    @property
    def K(self) -> float:
        """Speed ratio ``k_s / k_p = sqrt(2mu + lambda) / sqrt(mu)``."""
        return math.sqrt(self.p_modulus / self.mu)

    def wavenumbers(self, c: float) -> tuple[float, float]:
        """``(k_p, k_s)`` at energy parameter ``c`` (energy ``c^2``)."""
        return c / math.sqrt(self.p_modulus), c / math.sqrt(self.mu)


@dataclass(frozen=True)
class PlaneWave:
    """Plane wave ``exp(i omega d.x) a`` with direction ``d`` and polarization ``a``."""

    kind: str
    direction: tuple[float, float]
    polarization: tuple[float, float]
    omega: float

    def __post_init__(self):
        d = check_unit(self.direction)
        a = check_unit(self.polarization)
        if self.kind == "p":
            if np.linalg.norm(d - a) > 1e-10:
                raise ValueError("a p-wave is polarized along its direction")
        elif self.kind == "s":
            if abs(d @ a) > 1e-10:
                raise ValueError("an s-wave is polarized orthogonally to its direction")
        else:
            raise ValueError(f"kind must be 'p' or 's', got {self.kind!r}")
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    @classmethod
    def p_wave(cls, direction, omega: float) -> "PlaneWave":
        d = tuple(float(t) for t in direction)
        return cls("p", d, d, float(omega))

    @classmethod
    def s_wave(cls, direction, omega: float, polarization=None) -> "PlaneWave":
        d = np.asarray(direction, dtype=float)
        a = rot90(d) if polarization is None else np.asarray(polarization, dtype=float)
        return cls("s", tuple(d), tuple(float(t) for t in a), float(omega))

    def field(self, grid: GridSpec) -> np.ndarray:
        x1, x2 = grid.mesh
        d = np.asarray(self.direction)
        phase = np.exp(1j * self.omega * (d[0] * x1 + d[1] * x2))
        a = np.asarray(self.polarization)
        return np.stack([a[0] * phase, a[1] * phase])


@dataclass(frozen=True)
class SolverSettings:
    """Controls for the Lippmann-Schwinger solve.

    Attributes
    ----------
    tol : float
        Relative residual target, measured against ``||R(Q u_i)||``.
    max_iter : int
        Cap on operator applications (Krylov steps or fixed-point sweeps).
    restart : int
        GMRES restart length.
    pad_factor : float
        Required ratio ``R / R_supp``; at least 2 for an exact periodization.
    method : {"auto", "gmres", "fixed-point"}
        ``"auto"`` runs fixed-point sweeps when the first two residuals
        contract by at least 2x and GMRES otherwise.
    """

    tol: float = 1e-10
    max_iter: int = 600
    restart: int = 30
    pad_factor: float = 2.0
    method: str = "auto"

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.pad_factor < 2:
            raise ValueError("pad_factor must be at least 2")
        if self.method not in ("auto", "gmres", "fixed-point"):
            raise ValueError(f"unknown method {self.method!r}")


class SolverError(RuntimeError):
    """A Lippmann-Schwinger solve missed its residual target."""

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


# ---------------------------------------------------------------------------
# pointwise 2x2 kernels


@njit
def _matvec_loop(a, v):
    n1 = v.shape[1]
    n2 = v.shape[2]
    out = np.empty_like(v)
    for i in range(n1):
        for j in range(n2):
            v0 = v[0, i, j]
            v1 = v[1, i, j]
            out[0, i, j] = a[0, 0, i, j] * v0 + a[0, 1, i, j] * v1
            out[1, i, j] = a[1, 0, i, j] * v0 + a[1, 1, i, j] * v1
    return out


def _matvec_numpy(a, v):
    return np.einsum("ij...,j...->i...", a, v)


def pointwise_matvec(a, v, backend: str | None = None) -> np.ndarray:
    """Apply a field of 2x2 matrices ``a`` (2, 2, N, N) to a vector field ``v`` (2, N, N)."""
    if backend is None:
        backend = "numba" if USE_NUMBA else "numpy"
    a = np.ascontiguousarray(a, dtype=np.complex128)
    v = np.ascontiguousarray(v, dtype=np.complex128)
    if backend == "numba":
        return _matvec_loop(a, v)
    if backend == "numpy":
        return _matvec_numpy(a, v)
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# resolvent symbol


def kernel_radius(grid: GridSpec, support_radius: float, pad_factor: float = 2.0) -> float:
    """Truncation radius ``rho = 2 R_supp`` after checking the box is large enough."""
    if support_radius <= 0:
        raise ValueError("support radius must be positive")
    if grid.R < pad_factor * support_radius * (1 - 1e-12):
        raise ValueError(
            f"box half-width R={grid.R} is too small for support radius "
            f"{support_radius} (need R >= {pad_factor} * R_supp)"
        )
    return 2.0 * support_radius


@lru_cache(maxsize=8)
def _radial_tables(N: int, R: float, rho: float):
    """|xi|, J0(|xi| rho), J1(|xi| rho) and xi on the lattice, in FFT order."""
    grid = GridSpec(R, N)
    k1, k2 = grid.freq_mesh
    k1 = np.fft.ifftshift(k1)
    k2 = np.fft.ifftshift(k2)
    s = np.hypot(k1, k2)
    j0, j1 = bessel_j01(s * rho)
    for arr in (k1, k2, s, j0, j1):
        arr.setflags(write=False)
    return k1, k2, s, j0, j1


def truncated_kernel_symbol(s, j0s, j1s, k: float, rho: float) -> np.ndarray:
    """Transform ``M_k(s)`` of the disc-truncated kernel ``(i/4) H0(k|x|)``.

    Parameters
    ----------
    s : ndarray
        Frequency magnitudes ``|xi|``.
    j0s, j1s : ndarray
        ``J0(s rho)`` and ``J1(s rho)``.
    k : float
        Positive wavenumber.
    rho : float
        Truncation radius.
    """
    if not k > 0:
        raise ValueError("wavenumber must be positive")
    kr = k * rho
    J0k, J1k, Y0k, Y1k = (float(t[0]) for t in bessel_jy01(np.array([kr])))
    H0 = J0k + 1j * Y0k
    H1 = J1k + 1j * Y1k
    c = 0.5j * np.pi * rho
    num = 1.0 - c * (k * H1 * j0s - s * H0 * j1s)
    den = s * s - k * k
    near = np.abs(s - k) < RESONANCE_WINDOW * k
    if not np.any(near):
        return num / den
    # f(s) = num vanishes at s = k (Wronskian); expand f to second order.
    f1 = 0.5j * np.pi * rho ** 2 * k * (H1 * J1k + H0 * J0k)
    f2 = 0.5j * np.pi * rho ** 2 * (kr * (H1 * J0k - H0 * J1k) - H1 * J1k + H0 * J0k)
    ds = s - k
    taylor = (f1 + 0.5 * f2 * ds) / (s + k)
    return np.where(near, taylor, num / np.where(near, 1.0, den))


def resolvent_symbol(lame: LameParams, c: float, grid: GridSpec, support_radius: float,
                     pad_factor: float = 2.0) -> np.ndarray:
    """Tensor multiplier of the outgoing Lame resolvent, shape (2, 2, N, N), FFT order."""
    rho = kernel_radius(grid, support_radius, pad_factor)
    k1, k2, s, j0, j1 = _radial_tables(grid.N, grid.R, rho)
    kp, ks = lame.wavenumbers(c)
    m_s = truncated_kernel_symbol(s, j0, j1, ks, rho)
    if kp == ks:
        m_p = m_s
    else:
        m_p = truncated_kernel_symbol(s, j0, j1, kp, rho)
    diag = -m_s / lame.mu
    d = (m_s - m_p) / (c * c)
    out = np.empty((2, 2, grid.N, grid.N), dtype=np.complex128)
    out[0, 0] = diag + k1 * k1 * d
    out[0, 1] = k1 * k2 * d
    out[1, 0] = out[0, 1]
    out[1, 1] = diag + k2 * k2 * d
    return out


class _Resolvent:
    """Bound resolvent ``f -> R f`` for one ``(lame, c, grid, R_supp)``."""

    def __init__(self, lame, c, grid, support_radius, pad_factor=2.0):
        self.grid = grid
        self.symbol = resolvent_symbol(lame, c, grid, support_radius, pad_factor)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        fh = sfft.fft2(f, axes=(-2, -1))
        return sfft.ifft2(pointwise_matvec(self.symbol, fh), axes=(-2, -1))


def resolvent_apply(f, lame: LameParams, c: float, grid: GridSpec,
                    support_radius: float | None = None, pad_factor: float = 2.0) -> np.ndarray:
    """Apply the outgoing resolvent of ``Delta* + c^2`` to a compactly supported field.

    Parameters
    ----------
    f : ndarray, shape (2, N, N)
        Source, supported in ``|x| < support_radius``.
    lame : LameParams
    c : float
        Energy parameter; the energy is ``c^2``.
    grid : GridSpec
    support_radius : float, optional
        Defaults to ``R / pad_factor``.

    Returns
    -------
    ndarray, shape (2, N, N)
        ``v`` with ``(Delta* + c^2) v = f`` on the support ball.
    """
    if support_radius is None:
        support_radius = grid.R / pad_factor
    f = np.asarray(f, dtype=np.complex128)
    if f.shape != (2, grid.N, grid.N):
        raise ValueError("expected a vector field of shape (2, N, N)")
    return _Resolvent(lame, c, grid, support_radius, pad_factor)(f)


# ---------------------------------------------------------------------------
# Lippmann-Schwinger


@dataclass
class LSResult:
    """Scattered field with solver diagnostics."""

    v: np.ndarray
    iterations: int
    residual: float
    method: str
    info: dict = field(default_factory=dict)


def check_support(Q: np.ndarray, grid: GridSpec, support_radius: float) -> None:
    outside = ~grid.ball_mask(support_radius)
    if np.any(Q[..., outside] != 0):
        raise ValueError(f"load is not supported in the ball |x| < {support_radius}")


def _norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x.ravel()))


def solve_lippmann_schwinger(Q, wave: PlaneWave, c: float, lame: LameParams, grid: GridSpec,
                             support_radius: float | None = None,
                             settings: SolverSettings | None = None) -> LSResult:
    """Solve ``v = R(Q u_i) + R(Q v)`` for the scattered field.

    Parameters
    ----------
    Q : ndarray, shape (2, 2, N, N)
        Matrix load, supported in ``|x| < support_radius``.
    wave : PlaneWave
        Incident field ``u_i``.
    c : float
        Energy parameter of the resolvent.
    lame : LameParams
    grid : GridSpec
    support_radius : float, optional
        Defaults to ``R / pad_factor``.
    settings : SolverSettings, optional

    Returns
    -------
    LSResult
        The residual is ``||v - R(Qu_i) - R(Qv)|| / ||R(Qu_i)||`` and is
        checked against ``settings.tol`` before returning.

    Raises
    ------
    SolverError
        If the residual target is missed within ``settings.max_iter``.
    """
    settings = settings or SolverSettings()
    if support_radius is None:
        support_radius = grid.R / settings.pad_factor
    Q = np.asarray(Q, dtype=np.complex128)
    if Q.shape != (2, 2, grid.N, grid.N):
        raise ValueError("expected a matrix load of shape (2, 2, N, N)")
    check_support(Q, grid, support_radius)
    shape = (2, grid.N, grid.N)
    if not np.any(Q):
        return LSResult(np.zeros(shape, complex), 0, 0.0, "trivial")

    res = _Resolvent(lame, c, grid, support_radius, settings.pad_factor)

    def T(x):
        return res(pointwise_matvec(Q, x))

    b = T(wave.field(grid))
    bnorm = _norm(b)
    if bnorm == 0:
        return LSResult(np.zeros(shape, complex), 0, 0.0, "trivial")
    target = settings.tol * bnorm

    x = None
    used = 0
    method = settings.method
    if method in ("auto", "fixed-point"):
        x, used, resid, ok = _fixed_point(T, b, target, settings, probe=(method == "auto"))
        if ok:
            return LSResult(x, used, resid / bnorm, "fixed-point")
        if method == "fixed-point":
            raise SolverError(
                f"fixed-point iteration stalled at relative residual {resid / bnorm:.3e}",
                resid / bnorm, used)
    x, it = _gmres(T, b, x, settings, max(settings.max_iter - used, 1))
    used += it
    resid = _norm(b + T(x) - x)
    if not resid <= target:
        raise SolverError(
            f"GMRES missed tolerance: relative residual {resid / bnorm:.3e} "
            f"> {settings.tol:.1e} after {used} iterations", resid / bnorm, used)
    return LSResult(x, used, resid / bnorm, "gmres" if method != "auto" else "auto-gmres")


def _fixed_point(T, b, target, settings, probe):
    """Born sweeps ``x <- b + T x``; the residual of ``x`` is ``||b + T x - x||``.

    With ``probe`` set, give up unless the first sweep contracts the
    residual of the zero start by at least 2x.  Always give up once the
    residual stops decreasing.
    """
    x = b
    prev = _norm(b)
    used = 0
    while used < settings.max_iter:
        nxt = b + T(x)
        used += 1
        resid = _norm(nxt - x)
        if resid <= target:
            return x, used, resid, True
        if not np.isfinite(resid) or resid >= prev or (probe and used == 1 and resid > 0.5 * prev):
            return x, used, resid, False
        prev = resid
        x = nxt
    return x, used, prev, False


def _gmres(T, b, x0, settings, budget):
    n = b.size
    shape = b.shape

    def matvec(x):
        xx = x.reshape(shape)
        return (xx - T(xx)).ravel()

    op = LinearOperator((n, n), matvec=matvec, dtype=np.complex128)
    count = [0]

    def cb(_):
        count[0] += 1

    restart = min(settings.restart, budget)
    cycles = max(1, math.ceil(budget / restart))
    sol, info = gmres(op, b.ravel(), x0=None if x0 is None else x0.ravel(),
                      rtol=0.25 * settings.tol, atol=0.0, restart=restart,
                      maxiter=cycles, callback=cb, callback_type="pr_norm")
    if info < 0:
        raise SolverError("GMRES breakdown", float("nan"), count[0])
    return sol.reshape(shape), count[0]


# ---------------------------------------------------------------------------
# far fields and rescaled scattering data


class DatumParts(NamedTuple):
    """A datum split into its linear (Born) part and its scattered-field part."""

    linear: np.ndarray
    scattered: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.linear + self.scattered


def _project(vec, zeta, branch):
    along = (vec @ zeta) * zeta
    return along if branch == "p" else vec - along


def far_field(Q, wave: PlaneWave, v, branch: str, zeta, lame: LameParams, c: float,
              grid: GridSpec) -> np.ndarray:
    """Physical far-field amplitude of the ``p`` or ``s`` branch in direction ``zeta``.

    Branch ``p`` returns ``(2mu+lambda)^-1 Pi_zeta [Q(u_i+v)]^(k_p zeta)``,
    branch ``s`` returns ``mu^-1 (I - Pi_zeta) [Q(u_i+v)]^(k_s zeta)``.
    """
    zeta = check_unit(zeta)
    if branch not in ("p", "s"):
        raise ValueError("branch must be 'p' or 's'")
    kp, ks = lame.wavenumbers(c)
    src = pointwise_matvec(Q, wave.field(grid) + np.asarray(v))
    if branch == "p":
        return _project(nuft_eval(src, grid, kp * zeta), zeta, "p") / lame.p_modulus
    return _project(nuft_eval(src, grid, ks * zeta), zeta, "s") / lame.mu


_CHANNELS = {
    # kind: (incident type, receiver branch, frequency factor as a function of K)
    "pp": ("p", "p", lambda K: 1.0),
    "ps": ("p", "s", lambda K: K),
    "sp": ("s", "p", lambda K: 1.0 / K),
    "ss": ("s", "s", lambda K: 1.0),
}


def incident_wave(kind: str, omega: float, theta, polarization=None) -> PlaneWave:
    """Incident wave of a channel: p-waves along ``theta``, s-waves polarized by ``polarization``."""
    if _CHANNELS[kind][0] == "p":
        return PlaneWave.p_wave(theta, omega)
    return PlaneWave.s_wave(theta, omega, polarization)


def channel_energy(kind: str, omega: float, lame: LameParams) -> float:
    """Energy parameter of the rescaled solve: ``sqrt(2mu+lambda) omega`` or ``sqrt(mu) omega``."""
    if _CHANNELS[kind][0] == "p":
        return math.sqrt(lame.p_modulus) * omega
    return math.sqrt(lame.mu) * omega


def scattering_datum(kind: str, Q, omega: float, theta, zeta, lame: LameParams, grid: GridSpec,
                     support_radius: float | None = None,
                     settings: SolverSettings | None = None,
                     polarization=None, scattered: bool = True) -> DatumParts:
    """Rescaled scattering datum of one channel.

    The channels are ``pp``, ``ps`` (p-wave ``exp(i omega theta.x) theta`` at
    energy ``(2mu+lambda) omega^2``) and ``sp``, ``ss`` (s-wave
    ``exp(i omega theta.x) a`` at energy ``mu omega^2``).  The receiver
    frequency is ``omega zeta`` for ``pp``/``ss``, ``K omega zeta`` for ``ps``
    and ``omega zeta / K`` for ``sp``; the p-branch keeps ``Pi_zeta`` of the
    transform and the s-branch keeps ``I - Pi_zeta``.

    Returns
    -------
    DatumParts
        ``linear`` is the contribution of ``Q u_i`` (the Born datum) and
        ``scattered`` that of ``Q v``; ``scattered`` is zero when
        ``scattered=False`` and no solve is performed.
    """
    if kind not in _CHANNELS:
        raise ValueError(f"unknown channel {kind!r}")
    settings = settings or SolverSettings()
    theta = check_unit(theta)
    zeta = check_unit(zeta)
    Q = np.asarray(Q, dtype=np.complex128)
    wave = incident_wave(kind, omega, theta, polarization)
    c = channel_energy(kind, omega, lame)
    _, branch, factor = _CHANNELS[kind]
    freq = factor(lame.K) * omega * zeta
    ui = wave.field(grid)
    if scattered and np.any(Q):
        v = solve_lippmann_schwinger(Q, wave, c, lame, grid, support_radius, settings).v
        src = np.concatenate([pointwise_matvec(Q, ui), pointwise_matvec(Q, v)])
        F = nuft_eval(src, grid, freq)
        return DatumParts(_project(F[:2], zeta, branch), _project(F[2:], zeta, branch))
    F = nuft_eval(pointwise_matvec(Q, ui), grid, freq)
    return DatumParts(_project(F, zeta, branch), np.zeros(2, complex))
