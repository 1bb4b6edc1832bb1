"""Born approximation from backscattering data and its iterative refinement.

Every nonzero lattice frequency is written ``xi = -2 omega theta`` with
``omega = |xi| / 2`` and ``theta = -xi / |xi|``.  Receiving at ``zeta = -theta``,

* ``v^p = pp(omega) + ps(2 omega / (K + 1))`` recovers ``Q^(xi) theta``,
* ``v^s = sp(2 omega / (1/K + 1)) + ss(omega)`` recovers ``Q^(xi) theta_perp``,

up to the contributions of the scattered fields, which make up the error
term.  The Born approximation sets ``Q_B^(xi) e_i = (e_i.theta) v^p +
(e_i.theta_perp) v^s`` and inverts the lattice DFT.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .forward import (DatumParts, LameParams, SolverError, SolverSettings, check_support,
                      scattering_datum)
from .grid import GridSpec, rot90
from .parallel import pmap
from .reconstruct import IterationOptions, IterationResult, iterate_refinement, load_from_fourier

logger = logging.getLogger(__name__)


def backscatter_geometry(xi) -> tuple[float, np.ndarray, np.ndarray]:
    """``(omega, theta, theta_perp)`` with ``xi = -2 omega theta``."""
    xi = np.asarray(xi, dtype=float)
    s = float(np.hypot(*xi))
    if s == 0:
        raise ValueError("the zero frequency has no backscattering representation")
    theta = -xi / s
    return 0.5 * s, theta, rot90(theta)


def _add(a: DatumParts, b: DatumParts) -> DatumParts:
    return DatumParts(a.linear + b.linear, a.scattered + b.scattered)


def assemble_vp_inf(Q, omega: float, theta, lame: LameParams, grid: GridSpec,
                    support_radius: float | None = None,
                    settings: SolverSettings | None = None, scattered: bool = True) -> DatumParts:
    """p-incident backscattering vector ``pp(omega) + ps(2 omega / (K+1))`` at ``zeta = -theta``.

    Its linear part equals ``Q^(-2 omega theta) theta``.
    """
    theta = np.asarray(theta, dtype=float)
    zeta = -theta
    pp = scattering_datum("pp", Q, omega, theta, zeta, lame, grid, support_radius, settings,
                          scattered=scattered)
    ps = scattering_datum("ps", Q, 2.0 * omega / (lame.K + 1.0), theta, zeta, lame, grid,
                          support_radius, settings, scattered=scattered)
    return _add(pp, ps)


def assemble_vs_inf(Q, omega: float, theta, theta_perp, lame: LameParams, grid: GridSpec,
                    support_radius: float | None = None,
                    settings: SolverSettings | None = None, scattered: bool = True) -> DatumParts:
    """s-incident backscattering vector ``sp(2 omega / (1/K+1)) + ss(omega)`` at ``zeta = -theta``.

    The incident s-waves travel along ``theta`` polarized by ``theta_perp``;
    the linear part equals ``Q^(-2 omega theta) theta_perp``.
    """
    theta = np.asarray(theta, dtype=float)
    zeta = -theta
    sp = scattering_datum("sp", Q, 2.0 * omega / (1.0 / lame.K + 1.0), theta, zeta, lame, grid,
                          support_radius, settings, polarization=theta_perp, scattered=scattered)
    ss = scattering_datum("ss", Q, omega, theta, zeta, lame, grid, support_radius, settings,
                          polarization=theta_perp, scattered=scattered)
    return _add(sp, ss)


@dataclass
class BackscatterDataset:
    """Assembled backscattering vectors on the frequency lattice.

    Attributes
    ----------
    grid : GridSpec
    lame : LameParams
    vp, vs : ndarray, shape (N, N, 2)
        ``v^p`` and ``v^s`` at each lattice frequency (zero where unmeasured).
    measured : ndarray of bool, shape (N, N)
        False at the origin and at any entry whose solve failed.
    noise_level : float
    provenance : str
        ``"synthetic"``, ``"synthetic+noise"`` or ``"measured"``.
    failures : list of dict
        Per-entry solver failures (lattice index and message).
    """

    grid: GridSpec
    lame: LameParams
    vp: np.ndarray
    vs: np.ndarray
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
        """The stored complex 2-vectors, the unit the noise model perturbs."""
        return [self.vp, self.vs]


def _lattice_index(grid: GridSpec, a: int, b: int) -> tuple[int, int]:
    return int(grid.index[a]), int(grid.index[b])


def _backscatter_task(pos, Q, grid, lame, support_radius, settings, scattered):
    a, b = pos
    xi = (grid.freqs[a], grid.freqs[b])
    omega, theta, tperp = backscatter_geometry(xi)
    try:
        vp = assemble_vp_inf(Q, omega, theta, lame, grid, support_radius, settings, scattered)
        vs = assemble_vs_inf(Q, omega, theta, tperp, lame, grid, support_radius, settings, scattered)
    except SolverError as exc:
        return pos, None, None, str(exc)
    return pos, vp, vs, None


def _mirror_positions(grid: GridSpec):
    """Lattice points whose data follow from ``-xi`` by conjugate symmetry."""
    N = grid.N
    out = []
    for a in range(N):
        for b in range(N):
            j1, j2 = _lattice_index(grid, a, b)
            if j1 == -N // 2 or j2 == -N // 2 or (j1, j2) == (0, 0):
                continue
            if j1 < 0 or (j1 == 0 and j2 < 0):
                out.append((a, b))
    return out


def synthesize_backscatter(Q, grid: GridSpec, lame: LameParams, support_radius: float,
                           settings: SolverSettings | None = None, part: str = "total",
                           half_lattice: bool = False, workers: int = 1,
                           strict: bool = False) -> BackscatterDataset:
    """Solve the forward problems and assemble ``v^p``, ``v^s`` on the lattice.

    Parameters
    ----------
    Q : ndarray, shape (2, 2, N, N)
        Load supported in ``|x| < support_radius``.
    part : {"total", "linear", "scattered"}
        Which part of each datum to store.  ``linear`` performs no solves.
    half_lattice : bool
        Compute only half the lattice and fill the rest by
        ``v(-xi) = -conj(v(xi))``.  Exact only at the linear level.
    strict : bool
        Raise on the first solver failure instead of marking the entry.
    """
    if part not in ("total", "linear", "scattered"):
        raise ValueError(f"unknown part {part!r}")
    settings = settings or SolverSettings()
    Q = np.asarray(Q, dtype=np.complex128)
    check_support(Q, grid, support_radius)
    N = grid.N
    origin = grid.origin
    mirror = set(_mirror_positions(grid)) if half_lattice else set()
    positions = [(a, b) for a in range(N) for b in range(N)
                 if (a, b) != origin and (a, b) not in mirror]
    task = partial(_backscatter_task, Q=Q, grid=grid, lame=lame, support_radius=support_radius,
                   settings=settings, scattered=(part != "linear"))
    results = pmap(task, positions, workers)

    vp = np.zeros((N, N, 2), complex)
    vs = np.zeros((N, N, 2), complex)
    measured = np.zeros((N, N), bool)
    failures = []
    for pos, dp, ds, err in results:
        if err is not None:
            j = _lattice_index(grid, *pos)
            if strict:
                raise SolverError(f"backscatter entry xi index {j}: {err}")
            failures.append({"index": j, "message": err})
            logger.warning("backscatter entry %s failed: %s", j, err)
            continue
        pick = {"total": lambda d: d.total, "linear": lambda d: d.linear,
                "scattered": lambda d: d.scattered}[part]
        vp[pos] = pick(dp)
        vs[pos] = pick(ds)
        measured[pos] = True
    for a, b in mirror:
        ma, mb = (2 * origin[0] - a, 2 * origin[1] - b)
        if measured[ma, mb]:
            vp[a, b] = -np.conj(vp[ma, mb])
            vs[a, b] = -np.conj(vs[ma, mb])
            measured[a, b] = True
    return BackscatterDataset(grid, lame, vp, vs, measured, failures=failures)


def backscatter_fourier(data: BackscatterDataset) -> np.ndarray:
    """``Q_B^(xi_j)`` as a (2, 2, N, N) array; column ``i`` is ``Q_B^ e_i``."""
    grid = data.grid
    k1, k2 = grid.freq_mesh
    s = np.hypot(k1, k2)
    s = np.where(s == 0, 1.0, s)
    theta = np.stack([-k1 / s, -k2 / s])
    tperp = np.stack([-theta[1], theta[0]])
    vp = np.moveaxis(data.vp, -1, 0)
    vs = np.moveaxis(data.vs, -1, 0)
    qhat = vp[:, None] * theta[None, :] + vs[:, None] * tperp[None, :]
    return np.where(data.measured, qhat, 0.0)


def born_backscatter(data: BackscatterDataset, support_radius: float, fill: str = "support",
                     allow_partial: bool = False) -> np.ndarray:
    """Nodal Born approximation ``Q_B^h`` (2, 2, N, N) from a backscattering dataset."""
    expected = np.ones((data.grid.N, data.grid.N), bool)
    expected[data.grid.origin] = False
    if not allow_partial and np.any(expected & ~data.measured):
        raise ValueError("incomplete backscattering dataset "
                         f"({int((expected & ~data.measured).sum())} entries missing)")
    return load_from_fourier(backscatter_fourier(data), data.measured, data.grid, support_radius,
                             fill)


def error_term_backscatter(Qn, lame: LameParams, grid: GridSpec, support_radius: float,
                           settings: SolverSettings | None = None, fill: str = "support",
                           workers: int = 1) -> np.ndarray:
    """Nodal error term ``E(Q_n)``: the Born map applied to the scattered parts only."""
    data = synthesize_backscatter(Qn, grid, lame, support_radius, settings, part="scattered",
                                  workers=workers, strict=True)
    return born_backscatter(data, support_radius, fill)


def iterate_backscatter(QB, lame: LameParams, grid: GridSpec, support_radius: float,
                        settings: SolverSettings | None = None,
                        options: IterationOptions | None = None, true_load=None,
                        workers: int = 1) -> IterationResult:
    """Refine a backscattering Born approximation: ``Q_{n+1} = chi Q_B - chi E(Q_n)``."""
    options = options or IterationOptions()

    def error_term(Qn):
        return error_term_backscatter(Qn, lame, grid, support_radius, settings, options.fill,
                                      workers)

    return iterate_refinement(QB, error_term, grid, support_radius, options, true_load)
