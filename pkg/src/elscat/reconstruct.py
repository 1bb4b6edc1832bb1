"""From sampled Fourier data to nodal loads, plus the shared refinement loop.

Both Born approximations deliver ``Q^(xi_j)`` on the frequency lattice except
at a few points where the data are undefined (the origin for backscattering,
the two axes for fixed-angle data).  Those coefficients are filled before
the inverse DFT.  The default fill chooses them so that the reconstruction
vanishes, in the least-squares sense, on the nodes outside the declared
support ball; with exact data this reproduces the true coefficients.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .forward import SolverError
from .grid import GridSpec, dft_inverse, l2_norm

logger = logging.getLogger(__name__)

FILL_METHODS = ("support", "neighbors", "zero")


def fourier_to_coefficients(qhat, grid: GridSpec) -> np.ndarray:
    """Lattice coefficients from transform values: ``c_j = (2 pi)^2 / (2R) q^(xi_j)``."""
    return np.asarray(qhat) * ((2.0 * np.pi) ** 2 / (2.0 * grid.R))


@lru_cache(maxsize=16)
def _support_fill_operator(N: int, R: float, support_radius: float, unknown: tuple):
    grid = GridSpec(R, N)
    outside = ~grid.ball_mask(support_radius)
    x1 = grid.mesh[0][outside]
    x2 = grid.mesh[1][outside]
    idx = np.array(unknown, dtype=int).reshape(-1, 2)
    xi1 = grid.freqs[idx[:, 0]]
    xi2 = grid.freqs[idx[:, 1]]
    basis = np.exp(1j * (np.outer(x1, xi1) + np.outer(x2, xi2))) / (2.0 * R)
    pinv = np.linalg.pinv(basis)
    pinv.setflags(write=False)
    return outside, pinv


def fill_unmeasured(coeffs, measured, grid: GridSpec, support_radius: float,
                    method: str = "support") -> np.ndarray:
    """Fill the lattice coefficients flagged as unmeasured.

    Parameters
    ----------
    coeffs : ndarray, shape (..., N, N)
        Lattice coefficients; values at unmeasured points are ignored.
    measured : ndarray of bool, shape (N, N)
    grid : GridSpec
    support_radius : float
        Radius of the ball outside which the load vanishes.
    method : {"support", "neighbors", "zero"}
        ``support`` solves a least-squares problem that makes the nodal
        field vanish outside the ball; ``neighbors`` averages the measured
        4-neighbours (repeatedly, for clustered gaps); ``zero`` sets them to 0.
    """
    if method not in FILL_METHODS:
        raise ValueError(f"unknown fill method {method!r}")
    coeffs = np.array(coeffs, dtype=np.complex128)
    measured = np.asarray(measured, dtype=bool)
    gaps = np.argwhere(~measured)
    coeffs[..., ~measured] = 0.0
    if gaps.size == 0 or method == "zero":
        return coeffs
    if method == "support":
        outside, pinv = _support_fill_operator(grid.N, grid.R, float(support_radius),
                                               tuple(map(tuple, gaps)))
        nodal = dft_inverse(coeffs, grid)
        lead = coeffs.shape[:-2]
        rhs = nodal[..., outside].reshape(-1, int(outside.sum()))
        z = -(rhs @ pinv.T)
        coeffs[..., gaps[:, 0], gaps[:, 1]] = z.reshape(lead + (len(gaps),))
        return coeffs
    known = measured.copy()
    N = grid.N
    while not known.all():
        progress = False
        update = {}
        for a, b in np.argwhere(~known):
            nbrs = [(a + da, b + db) for da, db in ((1, 0), (-1, 0), (0, 1), (0, -1))
                    if 0 <= a + da < N and 0 <= b + db < N and known[a + da, b + db]]
            if nbrs:
                update[(a, b)] = np.mean([coeffs[..., i, j] for i, j in nbrs], axis=0)
        for (a, b), val in update.items():
            coeffs[..., a, b] = val
            known[a, b] = True
            progress = True
        if not progress:
            break
    return coeffs


def load_from_fourier(qhat, measured, grid: GridSpec, support_radius: float,
                      fill: str = "support") -> np.ndarray:
    """Nodal matrix load from transform samples ``q^(xi_j)`` on the lattice."""
    coeffs = fill_unmeasured(fourier_to_coefficients(qhat, grid), measured, grid,
                             support_radius, fill)
    return dft_inverse(coeffs, grid)


def reconstruction_error(Q, Qn, grid: GridSpec) -> float:
    """``max_ij (h^2 sum |Q_ij - Re (Q_n)_ij|^2)^(1/2)`` over the nodes."""
    Q = np.asarray(Q)
    Qn = np.asarray(Qn)
    if Q.shape != Qn.shape or Q.shape[-2:] != (grid.N, grid.N):
        raise ValueError("loads must share the grid")
    diff = np.real(Q) - np.real(Qn)
    per = grid.h * np.sqrt(np.sum(diff ** 2, axis=(-2, -1)))
    return float(np.max(per))


def relative_l2_error(Q, Qn, grid: GridSpec) -> float:
    """``||Q - Re Q_n|| / ||Q||`` in ``L^2(G_R)`` summed over components."""
    Q = np.asarray(Q)
    return l2_norm(np.real(Q) - np.real(Qn), grid) / l2_norm(Q, grid)


@dataclass(frozen=True)
class IterationOptions:
    """Settings of the refinement loop.

    Attributes
    ----------
    M : int
        Number of refinement steps after the Born approximation.
    real_load : bool
        Evaluate the error term at ``Re Q_n`` (the unknown load is real).
    early_stop : float or None
        Stop once ``||Q_{n+1} - Q_n|| / ||Q_n||`` drops below this.
    fill : str
        Fill method for unmeasured lattice points.
    """

    M: int = 4
    real_load: bool = True
    early_stop: float | None = None
    fill: str = "support"

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if self.fill not in FILL_METHODS:
            raise ValueError(f"unknown fill method {self.fill!r}")


@dataclass
class IterationResult:
    """Iterates ``[Q_1, ..., Q_{M+1}]`` with per-step diagnostics."""

    iterates: list = field(default_factory=list)
    update_norms: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    failed: bool = False
    message: str = ""


def iterate_refinement(QB, error_term: Callable[[np.ndarray], np.ndarray], grid: GridSpec,
                       support_radius: float, options: IterationOptions,
                       true_load=None) -> IterationResult:
    """Run ``Q_1 = chi Q_B``, ``Q_{n+1} = chi Q_B - chi E(Q_n)``.

    ``error_term`` maps a load to its nodal error term; ``chi`` is the nodal
    indicator of the support ball.  A solver failure stops the loop and the
    partial sequence is returned with ``failed`` set.
    """
    chi = grid.ball_mask(support_radius)
    base = np.where(chi, QB, 0.0)
    result = IterationResult()
    current = base
    result.iterates.append(current)
    if true_load is not None:
        result.errors.append(reconstruction_error(true_load, current, grid))
    for n in range(1, options.M + 1):
        t0 = time.perf_counter()
        feed = np.real(current).astype(np.complex128) if options.real_load else current
        try:
            E = error_term(feed)
        except SolverError as exc:
            result.failed = True
            result.message = f"iteration {n}: {exc}"
            logger.error(result.message)
            break
        nxt = base - np.where(chi, E, 0.0)
        upd = l2_norm(nxt - current, grid)
        ref = l2_norm(current, grid)
        result.iterates.append(nxt)
        result.update_norms.append(upd)
        diag = {"step": n, "seconds": time.perf_counter() - t0, "update": upd}
        if true_load is not None:
            err = reconstruction_error(true_load, nxt, grid)
            result.errors.append(err)
            diag["error"] = err
        result.diagnostics.append(diag)
        logger.info("refinement step %d: %s", n, diag)
        current = nxt
        if options.early_stop is not None and ref > 0 and upd / ref < options.early_stop:
            break
    return result
