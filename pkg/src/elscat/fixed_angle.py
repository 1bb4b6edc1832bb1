"""Born approximation from fixed-angle data and its iterative refinement.

For a fixed incident direction ``d`` every ``xi`` in the half-plane
``H_d = {xi . d < 0}`` lies on exactly one Ewald circle ``omega1 (zeta1 - d)``
and one K-Ewald circle ``omega2 (K zeta2 - d)`` when ``K >= 1``.  The
p-regime (``K >= 1``) combines the ``pp`` datum on the first with the ``ps``
datum on the second to recover ``Q^(xi) d``.  The s-regime (``K < 1``) uses
s-waves along ``d`` polarized by ``-d_perp``, the ``ss`` datum on the Ewald
circle and the ``sp`` datum on the ``1/K``-Ewald circle, to recover
``Q^(xi) (-d_perp)``.

The lattice is split into quadrants by the signs of ``xi . theta`` and
``xi . theta_perp``; in each quadrant the signed directions ``+-theta`` and
``+-theta_perp`` that put ``xi`` in their half-plane supply the columns
``Q^(xi) theta`` and ``Q^(xi) theta_perp``.  Lattice points on the two axes
are not reached and are filled before the inverse DFT.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .forward import (DatumParts, LameParams, SolverError, SolverSettings, check_support,
                      scattering_datum)
from .grid import GridSpec, check_unit, rot90
from .parallel import pmap
from .reconstruct import IterationOptions, IterationResult, iterate_refinement, load_from_fourier

logger = logging.getLogger(__name__)

AXIS_TOL = 1e-12


@dataclass(frozen=True)
class EwaldParams:
    """Frequencies and receiver directions with ``xi = omega1 (zeta1 - d) = omega2 (K zeta2 - d)``."""

    omega1: float
    omega2: float
    zeta1: tuple[float, float]
    zeta2: tuple[float, float]


def ewald_params(xi, d, K: float) -> EwaldParams:
    """Ewald parametrisation of ``xi`` for incident direction ``d`` and ratio ``K``.

    Parameters
    ----------
    xi : array_like, shape (2,)
        Frequency with ``xi . d < 0``.
    d : array_like, shape (2,)
        Unit incident direction.
    K : float
        Ratio of receiver to incident wavenumber on the second circle.

    Examples
    --------
    >>> p = ewald_params((-1.0, 0.0), (1.0, 0.0), 2.0)
    >>> p.omega1, p.omega2, p.zeta1, p.zeta2
    (0.5, 0.3333333333333333, (-1.0, 0.0), (-1.0, 0.0))
    """
    xi = np.asarray(xi, dtype=float)
    d = check_unit(d)
    if not K > 0:
        raise ValueError("K must be positive")
    dot = float(xi @ d)
    s2 = float(xi @ xi)
    if not dot < 0:
        raise ValueError(f"xi={xi} is not in the half-plane xi.d < 0 for d={d}")
    omega1 = -s2 / (2.0 * dot)
    zeta1 = -(2.0 * dot / s2) * xi + d
    disc = dot * dot + s2 * (K * K - 1.0)
    if disc < 0:
        raise ValueError(f"K={K} does not reach xi={xi} (negative discriminant)")
    root = -dot + math.sqrt(disc)
    omega2 = s2 / root
    zeta2 = (root / s2) * xi / K + d / K
    return EwaldParams(float(omega1), float(omega2), tuple(map(float, zeta1)),
                       tuple(map(float, zeta2)))


def regime_for(lame: LameParams, unit_k_regime: str = "p") -> str:
    """``"p"`` when ``K > 1``, ``"s"`` when ``K < 1``, the given choice at ``K = 1``."""
    if unit_k_regime not in ("p", "s"):
        raise ValueError("regime must be 'p' or 's'")
    K = lame.K
    if abs(K - 1.0) < 1e-14:
        return unit_k_regime
    return "p" if K > 1 else "s"


def incident_polarization(d, regime: str) -> np.ndarray:
    """Polarization of the incident wave along ``d``: ``d`` (p) or ``-d_perp`` (s)."""
    d = np.asarray(d, dtype=float)
    return d.copy() if regime == "p" else -rot90(d)


def _combine(first: DatumParts, second: DatumParts, z_keep, z_dot, denom) -> DatumParts:
    # v = first + [(second - first) . z_dot / denom] z_keep, applied to both parts
    def one(a, b):
        return a + (((b - a) @ z_dot) / denom) * z_keep

    return DatumParts(one(first.linear, second.linear), one(first.scattered, second.scattered))


def v_inf_fixed(xi, d, regime: str, Q, lame: LameParams, grid: GridSpec,
                support_radius: float | None = None, settings: SolverSettings | None = None,
                scattered: bool = True) -> DatumParts:
    """Fixed-angle vector recovering ``Q^(xi) a`` with ``a = incident_polarization(d)``.

    p-regime: ``v = B + [(A - B) . zeta1 / (zeta1 . zeta2)] zeta2`` with
    ``A = pp(omega1)`` received at ``zeta1`` and ``B = ps(omega2)`` at ``zeta2``.
    s-regime: ``v = B + [(A - B) . zeta2 / (zeta1 . zeta2)] zeta1`` with
    ``B = ss(omega1)`` at ``zeta1`` and ``A = sp(omega2)`` at ``zeta2``, the
    Ewald parameters taken with ratio ``1/K``.
    """
    xi = np.asarray(xi, dtype=float)
    d = check_unit(d)
    if regime == "p":
        ep = ewald_params(xi, d, lame.K)
        z1, z2 = np.array(ep.zeta1), np.array(ep.zeta2)
        A = scattering_datum("pp", Q, ep.omega1, d, z1, lame, grid, support_radius, settings,
                             scattered=scattered)
        B = scattering_datum("ps", Q, ep.omega2, d, z2, lame, grid, support_radius, settings,
                             scattered=scattered)
        return _combine(B, A, z2, z1, float(z1 @ z2))
    if regime == "s":
        pol = incident_polarization(d, "s")
        ep = ewald_params(xi, d, 1.0 / lame.K)
        z1, z2 = np.array(ep.zeta1), np.array(ep.zeta2)
        B = scattering_datum("ss", Q, ep.omega1, d, z1, lame, grid, support_radius, settings,
                             polarization=pol, scattered=scattered)
        A = scattering_datum("sp", Q, ep.omega2, d, z2, lame, grid, support_radius, settings,
                             polarization=pol, scattered=scattered)
        return _combine(B, A, z1, z2, float(z1 @ z2))
    raise ValueError(f"unknown regime {regime!r}")


def signed_directions(theta) -> np.ndarray:
    """Rows ``+theta, -theta, +theta_perp, -theta_perp``; row index is the direction code."""
    theta = check_unit(theta)
    tp = rot90(theta)
    return np.stack([theta, -theta, tp, -tp])


def quadrant(xi, theta) -> int:
    """Quadrant tag 1-4 from the signs of ``xi.theta`` and ``xi.theta_perp``; 0 on the axes."""
    xi = np.asarray(xi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    s = float(np.hypot(*xi))
    a = float(xi @ theta)
    b = float(xi @ rot90(theta))
    if s == 0 or abs(a) <= AXIS_TOL * s or abs(b) <= AXIS_TOL * s:
        return 0
    if a > 0:
        return 1 if b > 0 else 4
    return 2 if b > 0 else 3


def column_sources(xi, theta, regime: str) -> tuple[int, int]:
    """Direction codes supplying the ``theta`` and ``theta_perp`` columns at ``xi``."""
    dirs = signed_directions(theta)
    targets = (dirs[0], dirs[2])
    codes = []
    for t in targets:
        for code, d in enumerate(dirs):
            pol = incident_polarization(d, regime)
            if abs(abs(pol @ t) - 1.0) < 1e-12 and float(np.asarray(xi) @ d) < 0:
                codes.append(code)
                break
    return codes[0], codes[1]


@dataclass
class FixedAngleDataset:
    """Fixed-angle vectors on the frequency lattice.

    Attributes
    ----------
    grid : GridSpec
    lame : LameParams
    theta : tuple
        The fixed incident direction.
    regime : {"p", "s"}
    va, vb : ndarray, shape (N, N, 2)
        Raw vectors from the signed directions supplying the ``theta`` and
        ``theta_perp`` columns.
    dir_a, dir_b : ndarray of int8, shape (N, N)
        Their direction codes (see :func:`signed_directions`).
    quadrant : ndarray of int8, shape (N, N)
        Quadrant tags; 0 marks the excluded axis points.
    measured : ndarray of bool, shape (N, N)
    """

    grid: GridSpec
    lame: LameParams
    theta: tuple
    regime: str
    va: np.ndarray
    vb: np.ndarray
    dir_a: np.ndarray
    dir_b: np.ndarray
    quadrant: np.ndarray
    measured: np.ndarray
    noise_level: float = 0.0
    provenance: str = "synthetic"
    failures: list = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.failures)

    @property
    def entry_count(self) -> int:
        return int(self.measured.sum())

    def vectors(self):
        return [self.va, self.vb]


def _fixed_task(pos, Q, grid, lame, theta, regime, support_radius, settings, scattered):
    a, b = pos
    xi = np.array([grid.freqs[a], grid.freqs[b]])
    code_a, code_b = column_sources(xi, theta, regime)
    dirs = signed_directions(theta)
    try:
        va = v_inf_fixed(xi, dirs[code_a], regime, Q, lame, grid, support_radius, settings,
                         scattered)
        vb = v_inf_fixed(xi, dirs[code_b], regime, Q, lame, grid, support_radius, settings,
                         scattered)
    except SolverError as exc:
        return pos, code_a, code_b, None, None, str(exc)
    return pos, code_a, code_b, va, vb, None


def synthesize_fixed_angle(Q, theta, grid: GridSpec, lame: LameParams, support_radius: float,
                           settings: SolverSettings | None = None, part: str = "total",
                           regime: str | None = None, workers: int = 1,
                           strict: bool = False) -> FixedAngleDataset:
    """Solve the forward problems needed by the fixed-angle Born approximation.

    Parameters
    ----------
    Q : ndarray, shape (2, 2, N, N)
    theta : array_like
        Fixed incident direction.
    part : {"total", "linear", "scattered"}
    regime : {"p", "s"}, optional
        Defaults to :func:`regime_for`.
    """
    if part not in ("total", "linear", "scattered"):
        raise ValueError(f"unknown part {part!r}")
    settings = settings or SolverSettings()
    theta = check_unit(theta)
    regime = regime or regime_for(lame)
    _check_regime(lame, regime)
    Q = np.asarray(Q, dtype=np.complex128)
    check_support(Q, grid, support_radius)
    N = grid.N
    quad = np.zeros((N, N), np.int8)
    positions = []
    for a in range(N):
        for b in range(N):
            tag = quadrant((grid.freqs[a], grid.freqs[b]), theta)
            quad[a, b] = tag
            if tag:
                positions.append((a, b))
    task = partial(_fixed_task, Q=Q, grid=grid, lame=lame, theta=theta, regime=regime,
                   support_radius=support_radius, settings=settings,
                   scattered=(part != "linear"))
    results = pmap(task, positions, workers)

    va = np.zeros((N, N, 2), complex)
    vb = np.zeros((N, N, 2), complex)
    dir_a = np.full((N, N), -1, np.int8)
    dir_b = np.full((N, N), -1, np.int8)
    measured = np.zeros((N, N), bool)
    failures = []
    pick = {"total": lambda d: d.total, "linear": lambda d: d.linear,
            "scattered": lambda d: d.scattered}[part]
    for pos, ca, cb, da, db, err in results:
        dir_a[pos] = ca
        dir_b[pos] = cb
        if err is not None:
            j = (int(grid.index[pos[0]]), int(grid.index[pos[1]]))
            if strict:
                raise SolverError(f"fixed-angle entry xi index {j}: {err}")
            failures.append({"index": j, "message": err})
            logger.warning("fixed-angle entry %s failed: %s", j, err)
            continue
        va[pos] = pick(da)
        vb[pos] = pick(db)
        measured[pos] = True
    return FixedAngleDataset(grid, lame, tuple(map(float, theta)), regime, va, vb, dir_a, dir_b,
                             quad, measured, failures=failures)


def _check_regime(lame: LameParams, regime: str) -> None:
    if regime not in ("p", "s"):
        raise ValueError(f"unknown regime {regime!r}")
    K = lame.K
    if abs(K - 1.0) < 1e-14:
        return
    if (K > 1) != (regime == "p"):
        raise ValueError(f"regime {regime!r} does not match K={K:.6g}")


def fixed_angle_fourier(data: FixedAngleDataset) -> np.ndarray:
    """``Q_B^theta^(xi_j)`` as a (2, 2, N, N) array (zero on the excluded axes)."""
    theta = np.asarray(data.theta)
    tp = rot90(theta)
    dirs = signed_directions(theta)
    pols = np.stack([incident_polarization(d, data.regime) for d in dirs])
    ok = data.measured
    sign_a = np.where(ok, pols[np.clip(data.dir_a, 0, 3)] @ theta, 0.0)
    sign_b = np.where(ok, pols[np.clip(data.dir_b, 0, 3)] @ tp, 0.0)
    col_a = np.moveaxis(data.va * sign_a[..., None], -1, 0)
    col_b = np.moveaxis(data.vb * sign_b[..., None], -1, 0)
    qhat = col_a[:, None] * theta[None, :, None, None] + col_b[:, None] * tp[None, :, None, None]
    return np.where(ok, qhat, 0.0)


def born_fixed_angle(data: FixedAngleDataset, support_radius: float, fill: str = "support",
                     lame: LameParams | None = None, allow_partial: bool = False) -> np.ndarray:
    """Nodal fixed-angle Born approximation ``Q_B^theta`` (2, 2, N, N)."""
    _check_regime(lame or data.lame, data.regime)
    expected = data.quadrant > 0
    if not allow_partial and np.any(expected & ~data.measured):
        raise ValueError("incomplete fixed-angle dataset "
                         f"({int((expected & ~data.measured).sum())} entries missing)")
    return load_from_fourier(fixed_angle_fourier(data), data.measured, data.grid, support_radius,
                             fill)


def error_term_fixed_angle(Qn, theta, lame: LameParams, grid: GridSpec, support_radius: float,
                           settings: SolverSettings | None = None, fill: str = "support",
                           regime: str | None = None, workers: int = 1) -> np.ndarray:
    """Nodal error term ``E^theta(Q_n)`` from the scattered parts of the fixed-angle data."""
    data = synthesize_fixed_angle(Qn, theta, grid, lame, support_radius, settings,
                                  part="scattered", regime=regime, workers=workers, strict=True)
    return born_fixed_angle(data, support_radius, fill)


def iterate_fixed_angle(QB, theta, lame: LameParams, grid: GridSpec, support_radius: float,
                        settings: SolverSettings | None = None,
                        options: IterationOptions | None = None, regime: str | None = None,
                        true_load=None, workers: int = 1) -> IterationResult:
    """Refine a fixed-angle Born approximation with ``E^theta``."""
    options = options or IterationOptions()

    def error_term(Qn):
        return error_term_fixed_angle(Qn, theta, lame, grid, support_radius, settings,
                                      options.fill, regime, workers)

    return iterate_refinement(QB, error_term, grid, support_radius, options, true_load)


def unit_k_regime_difference(Q, theta, lame: LameParams, grid: GridSpec, support_radius: float,
                             settings: SolverSettings | None = None, part: str = "total",
                             fill: str = "support") -> float:
    """Relative ``L^2`` difference of the p- and s-regime approximations at ``K = 1``."""
    if abs(lame.K - 1.0) > 1e-14:
        raise ValueError("both regimes are defined only at K = 1")
    out = []
    for regime in ("p", "s"):
        data = synthesize_fixed_angle(Q, theta, grid, lame, support_radius, settings, part,
                                      regime)
        out.append(born_fixed_angle(data, support_radius, fill))
    ref = np.linalg.norm(out[0])
    return float(np.linalg.norm(out[0] - out[1]) / ref) if ref else 0.0
