"""Bessel and Hankel functions of orders 0 and 1 for real positive arguments.

Small arguments use the ascending power series; large arguments use the
Hankel asymptotic expansion, truncated at its smallest term.  The switch
point ``SWITCH = 12`` keeps both branches near 1e-11 absolute accuracy:
at 8 the asymptotic series bottoms out around 1e-7.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

SWITCH = 12.0
_EULER_GAMMA = 0.57721566490153286061
_SERIES_TERMS = 48
_ASYMPTOTIC_TERMS = 40


@njit
def _asymptotic(x, nu):
    """Hankel expansion of (J_nu, Y_nu), stopped at the smallest term."""
    mu4 = 4.0 * nu * nu
    p = 1.0
    qsum = 0.0
    t = 1.0
    prev = 1e300
    for k in range(1, _ASYMPTOTIC_TERMS):
        t = t * (mu4 - (2.0 * k - 1.0) ** 2) / (8.0 * k * x)
        if abs(t) >= prev:
            break
        prev = abs(t)
        sign = 1.0 if (k // 2) % 2 == 0 else -1.0
        if k % 2 == 0:
            p += sign * t
        else:
            qsum += sign * t
    chi = x - (0.5 * nu + 0.25) * math.pi
    amp = math.sqrt(2.0 / (math.pi * x))
    c = math.cos(chi)
    s = math.sin(chi)
    return amp * (p * c - qsum * s), amp * (p * s + qsum * c)


@njit
def _jy01_scalar(x):
    """Return ``(J0, J1, Y0, Y1)`` at one real ``x > 0``."""
    if x < SWITCH:
        q = 0.25 * x * x
        # term_k = (-q)^k / (k!)^2, the J0 series term
        term = 1.0
        harmonic = 0.0
        j0 = 1.0
        y0_sum = 0.0
        # term1_k = (-q)^k / (k! (k+1)!), the J1 series term without x/2
        term1 = 1.0
        j1_sum = 1.0
        y1_sum = (-2.0 * _EULER_GAMMA + 1.0) * term1
        for k in range(1, _SERIES_TERMS):
            term = -term * q / (k * k)
            term1 = -term1 * q / (k * (k + 1.0))
            harmonic += 1.0 / k
            j0 += term
            y0_sum -= harmonic * term
            j1_sum += term1
            y1_sum += (-2.0 * _EULER_GAMMA + harmonic + harmonic + 1.0 / (k + 1.0)) * term1
            if abs(term) < 1e-18 * abs(j0) and abs(term1) < 1e-18 and k > 4:
                break
        half = 0.5 * x
        j1 = half * j1_sum
        log_term = math.log(half) + _EULER_GAMMA
        y0 = (2.0 / math.pi) * (log_term * j0 + y0_sum)
        y1 = (-2.0 / (math.pi * x) + (2.0 / math.pi) * math.log(half) * j1
              - (half / math.pi) * y1_sum)
        return j0, j1, y0, y1

    j0, y0 = _asymptotic(x, 0.0)
    j1, y1 = _asymptotic(x, 1.0)
    return j0, j1, y0, y1


@njit
def _jy01_loop(x):
    n = x.size
    j0 = np.empty(n)
    j1 = np.empty(n)
    y0 = np.empty(n)
    y1 = np.empty(n)
    for i in range(n):
        a, b, c, d = _jy01_scalar(x[i])
        j0[i] = a
        j1[i] = b
        y0[i] = c
        y1[i] = d
    return j0, j1, y0, y1


def _jy01_numpy(x):
    """Vectorised twin of :func:`_jy01_loop` with fixed term counts."""
    j0 = np.empty_like(x)
    j1 = np.empty_like(x)
    y0 = np.empty_like(x)
    y1 = np.empty_like(x)

    small = x < SWITCH
    if np.any(small):
        xs = x[small]
        q = 0.25 * xs * xs
        term = np.ones_like(xs)
        term1 = np.ones_like(xs)
        harmonic = 0.0
        s_j0 = np.ones_like(xs)
        s_y0 = np.zeros_like(xs)
        s_j1 = np.ones_like(xs)
        s_y1 = (-2.0 * _EULER_GAMMA + 1.0) * term1
        for k in range(1, _SERIES_TERMS):
            term = -term * q / (k * k)
            term1 = -term1 * q / (k * (k + 1.0))
            harmonic += 1.0 / k
            s_j0 += term
            s_y0 -= harmonic * term
            s_j1 += term1
            s_y1 += (-2.0 * _EULER_GAMMA + 2.0 * harmonic + 1.0 / (k + 1.0)) * term1
        half = 0.5 * xs
        jj1 = half * s_j1
        j0[small] = s_j0
        j1[small] = jj1
        y0[small] = (2.0 / np.pi) * ((np.log(half) + _EULER_GAMMA) * s_j0 + s_y0)
        y1[small] = (-2.0 / (np.pi * xs) + (2.0 / np.pi) * np.log(half) * jj1
                     - (half / np.pi) * s_y1)

    large = ~small
    if np.any(large):
        xl = x[large]
        amp = np.sqrt(2.0 / (np.pi * xl))
        for nu, (jout, yout) in enumerate(((j0, y0), (j1, y1))):
            mu4 = 4.0 * nu * nu
            p = np.ones_like(xl)
            qsum = np.zeros_like(xl)
            t = np.ones_like(xl)
            prev = np.full_like(xl, np.inf)
            active = np.ones(xl.shape, dtype=bool)
            for k in range(1, _ASYMPTOTIC_TERMS):
                t = t * (mu4 - (2.0 * k - 1.0) ** 2) / (8.0 * k * xl)
                active &= np.abs(t) < prev
                prev = np.where(active, np.abs(t), prev)
                sign = 1.0 if (k // 2) % 2 == 0 else -1.0
                contrib = np.where(active, sign * t, 0.0)
                if k % 2 == 0:
                    p += contrib
                else:
                    qsum += contrib
            chi = xl - (0.5 * nu + 0.25) * np.pi
            c = np.cos(chi)
            s = np.sin(chi)
            jout[large] = amp * (p * c - qsum * s)
            yout[large] = amp * (p * s + qsum * c)
    return j0, j1, y0, y1


def bessel_jy01(x, backend: str | None = None):
    """Evaluate J0, J1, Y0, Y1 at real positive arguments.

    Parameters
    ----------
    x : array_like
        Real arguments, all strictly positive.
    backend : {"numba", "numpy"}, optional
        Force a kernel; the default follows the package-wide switch.

    Returns
    -------
    tuple of ndarray
        ``(J0, J1, Y0, Y1)`` with the shape of ``x``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("Bessel arguments must be strictly positive")
    if backend is None:
        backend = "numba" if USE_NUMBA else "numpy"
    flat = np.ascontiguousarray(x.ravel())
    if backend == "numba":
        out = _jy01_loop(flat)
    elif backend == "numpy":
        out = _jy01_numpy(flat)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return tuple(o.reshape(x.shape) for o in out)


def bessel_j01(x, backend: str | None = None):
    """J0 and J1 at real arguments ``x >= 0`` (the origin is allowed)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("arguments must be nonnegative")
    j0 = np.ones_like(x)
    j1 = np.zeros_like(x)
    pos = x > 0
    if np.any(pos):
        a, b, _, _ = bessel_jy01(x[pos], backend)
        j0[pos] = a
        j1[pos] = b
    return j0, j1


def hankel1_01(x, backend: str | None = None):
    """Outgoing Hankel functions H0^(1) and H1^(1) at real ``x > 0``."""
    j0, j1, y0, y1 = bessel_jy01(x, backend)
    return j0 + 1j * y0, j1 + 1j * y1
