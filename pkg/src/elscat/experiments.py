"""Test loads, noise, experiment configuration and end-to-end pipelines."""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .backscatter import BackscatterDataset, born_backscatter, iterate_backscatter, synthesize_backscatter
from .fixed_angle import FixedAngleDataset, born_fixed_angle, iterate_fixed_angle, synthesize_fixed_angle
from .forward import LameParams, SolverSettings
from .grid import GridSpec, make_grid
from .reconstruct import IterationOptions, IterationResult, reconstruction_error, relative_l2_error

logger = logging.getLogger(__name__)

LOAD_NAMES = ("pot1", "pot2", "lipschitz-diamond", "custom-samples")
PATTERNS = ("ones", "identity", "diagonal", "general")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


# ---------------------------------------------------------------------------
# loads


def pot1(x1, x2):
    """Piecewise-constant load: 1.2 on a small diamond, 1 on an annulus."""
    r = np.hypot(x1, x2)
    return np.where(np.abs(x1) + np.abs(x2) < 0.2, 1.2, np.where((r > 0.6) & (r < 0.8), 1.0, 0.0))


def pot2(x1, x2):
    """Sum of three Gaussian bumps, cut off sharply at ``|x| = 1``."""
    q = (np.exp(-5.0 * ((x1 - 0.5) ** 2 + x2 ** 2))
         + 1.5 * np.exp(-4.0 * ((x1 + 0.5) ** 2 + (x2 - 0.4) ** 2))
         + 2.0 * np.exp(-7.0 * ((x1 + 0.4) ** 2 + (x2 + 0.4) ** 2) - 0.4))
    return np.where(np.hypot(x1, x2) < 1.0, q, 0.0)


def lipschitz_diamond(x1, x2, alpha: float = 10.0):
    """``alpha (1 - |x1| - |x2|)_+``, with a derivative jump along the diamond's edges."""
    return alpha * np.maximum(0.0, 1.0 - np.abs(x1) - np.abs(x2))


@dataclass(frozen=True)
class LoadSpec:
    """Description of a matrix load ``Q(x) = amplitude * q(x) * W``.

    Attributes
    ----------
    name : str
        One of ``pot1``, ``pot2``, ``lipschitz-diamond``, ``custom-samples``.
    amplitude : float
    pattern : str
        ``ones`` (all-ones matrix), ``identity``, ``diagonal`` (uses
        ``weights[0]``, ``weights[3]``) or ``general`` (row-major ``weights``).
    weights : tuple of 4 floats
    alpha : float
        Slope of the Lipschitz diamond.
    samples_path : str
        File with nodal samples for ``custom-samples`` (``.npy`` or ELSC).
    support_radius : float
        The built-in loads are cut to ``|x| < support_radius``.
    """

    name: str = "pot2"
    amplitude: float = 1.0
    pattern: str = "ones"
    weights: tuple = (1.0, 0.0, 0.0, 1.0)
    alpha: float = 10.0
    samples_path: str = ""
    support_radius: float = 1.0


def pattern_matrix(pattern: str, weights=(1.0, 0.0, 0.0, 1.0)) -> np.ndarray:
    if pattern == "ones":
        return np.ones((2, 2))
    if pattern == "identity":
        return np.eye(2)
    if pattern == "diagonal":
        return np.diag([weights[0], weights[3]]).astype(float)
    if pattern == "general":
        return np.asarray(weights, dtype=float).reshape(2, 2)
    raise ConfigError(f"unknown matrix pattern {pattern!r}")


def make_load(spec: LoadSpec, grid: GridSpec) -> np.ndarray:
    """Nodal samples of the matrix load, shape (2, 2, N, N), complex dtype."""
    x1, x2 = grid.mesh
    if spec.name == "pot1":
        q = pot1(x1, x2)
    elif spec.name == "pot2":
        q = pot2(x1, x2)
    elif spec.name == "lipschitz-diamond":
        q = lipschitz_diamond(x1, x2, spec.alpha)
    elif spec.name == "custom-samples":
        q = _load_samples(spec.samples_path, grid)
    else:
        raise ConfigError(f"unknown load {spec.name!r}; expected one of {LOAD_NAMES}")
    if q.shape == (2, 2, grid.N, grid.N):
        Q = np.asarray(q, dtype=np.complex128) * spec.amplitude
    else:
        W = pattern_matrix(spec.pattern, spec.weights)
        Q = (spec.amplitude * W[:, :, None, None] * q[None, None]).astype(np.complex128)
    return np.where(grid.ball_mask(spec.support_radius), Q, 0.0)


def _load_samples(path: str, grid: GridSpec) -> np.ndarray:
    if not path:
        raise ConfigError("custom-samples needs samples_path")
    p = Path(path)
    if p.suffix == ".npy":
        q = np.load(p)
    else:
        from .io import read_field

        q, g = read_field(p)
        if (g.N, g.R) != (grid.N, grid.R):
            raise ConfigError("custom samples were stored on a different grid")
    if q.shape[-2:] != (grid.N, grid.N):
        raise ConfigError(f"custom samples have shape {q.shape}, grid is {grid.N}x{grid.N}")
    return q


# ---------------------------------------------------------------------------
# noise


def add_noise(dataset, level: float, seed: int, mode: str = "per-datum"):
    """Return a copy of ``dataset`` with relative complex Gaussian noise.

    ``per-datum``: each stored 2-vector ``d`` becomes ``d + level |d| g``
    with ``g`` a complex standard normal 2-vector scaled to unit norm.
    ``global``: the perturbation of the whole dataset has norm
    ``level * ||data||`` and a Gaussian direction.
    Draws cover every lattice slot in a fixed order, so a seed fixes the
    result regardless of which entries are measured.
    """
    if not 0 <= level < 1:
        raise ValueError("noise level must lie in [0, 1)")
    if mode not in ("per-datum", "global"):
        raise ValueError(f"unknown noise mode {mode!r}")
    arrays = [v.copy() for v in dataset.vectors()]
    if level == 0:
        return _with_vectors(dataset, arrays, dataset.noise_level, dataset.provenance)
    rng = np.random.default_rng(seed)
    mask = dataset.measured
    draws = [rng.standard_normal(a.shape) + 1j * rng.standard_normal(a.shape) for a in arrays]
    if mode == "per-datum":
        for a, g in zip(arrays, draws):
            gn = np.linalg.norm(g, axis=-1, keepdims=True)
            dn = np.linalg.norm(a, axis=-1, keepdims=True)
            a[mask] += (level * dn * g / gn)[mask]
    else:
        total = math.sqrt(sum(float(np.sum(np.abs(a[mask]) ** 2)) for a in arrays))
        gtot = math.sqrt(sum(float(np.sum(np.abs(g[mask]) ** 2)) for g in draws))
        for a, g in zip(arrays, draws):
            a[mask] += level * total * g[mask] / gtot
    return _with_vectors(dataset, arrays, level, "synthetic+noise")


def _with_vectors(dataset, arrays, level, provenance):
    if isinstance(dataset, BackscatterDataset):
        return replace(dataset, vp=arrays[0], vs=arrays[1], noise_level=level,
                       provenance=provenance, failures=list(dataset.failures))
    if isinstance(dataset, FixedAngleDataset):
        return replace(dataset, va=arrays[0], vb=arrays[1], noise_level=level,
                       provenance=provenance, failures=list(dataset.failures))
    raise TypeError(f"unsupported dataset type {type(dataset).__name__}")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment run."""

    lam: float = 2.0
    mu: float = 1.0
    R: float = 2.0
    N: int = 32
    load: LoadSpec = field(default_factory=LoadSpec)
    kind: str = "backscatter"
    theta: tuple = (1.0, 0.0)
    regime: str = ""
    noise: float = 0.0
    noise_mode: str = "per-datum"
    M: int = 4
    tol: float = 1e-10
    max_iter: int = 600
    restart: int = 30
    method: str = "auto"
    fill: str = "support"
    real_load: bool = True
    early_stop: float = 0.0
    half_lattice: bool = False
    support_radius: float = 0.0
    workers: int = 1
    seed: int = 0
    output_dir: str = "out"

    def __post_init__(self):
        if self.kind not in ("backscatter", "fixed-angle"):
            raise ConfigError(f"kind must be backscatter or fixed-angle, got {self.kind!r}")
        if self.load.name not in LOAD_NAMES:
            raise ConfigError(f"unknown load {self.load.name!r}")
        if self.load.pattern not in PATTERNS:
            raise ConfigError(f"unknown matrix pattern {self.load.pattern!r}")
        if not 0 <= self.noise < 1:
            raise ConfigError("noise must lie in [0, 1)")
        if self.regime not in ("", "p", "s"):
            raise ConfigError("regime must be p, s or empty")
        try:
            self.lame
            self.grid
            self.solver
            self.iteration
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def lame(self) -> LameParams:
        return LameParams(self.lam, self.mu)

    @property
    def grid(self) -> GridSpec:
        return make_grid(self.R, self.N)

    @property
    def solver(self) -> SolverSettings:
        return SolverSettings(tol=self.tol, max_iter=self.max_iter, restart=self.restart,
                              method=self.method)

    @property
    def iteration(self) -> IterationOptions:
        return IterationOptions(M=self.M, real_load=self.real_load,
                                early_stop=self.early_stop or None, fill=self.fill)

    @property
    def chi_radius(self) -> float:
        """Cutoff radius of the iteration; defaults to the load's support radius."""
        return self.support_radius or self.load.support_radius

    @property
    def theta_vec(self) -> np.ndarray:
        t = np.asarray(self.theta, dtype=float)
        return t / np.hypot(*t)

    def canonical(self) -> str:
        """Sorted ``key = value`` text of the result-determining keys, the basis of :meth:`digest`.

        ``output_dir`` and ``workers`` are left out: they do not change any number.
        """
        items = {k: v for k, v in flatten_config(self).items() if k not in _NEUTRAL_KEYS}
        return "\n".join(f"{k} = {v}" for k, v in sorted(items.items())) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


_NEUTRAL_KEYS = ("output_dir", "workers")

_LOAD_KEYS = {"load": "name", "load_amplitude": "amplitude", "load_pattern": "pattern",
              "load_weights": "weights", "load_alpha": "alpha",
              "load_samples": "samples_path", "load_support": "support_radius"}


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_fmt(t) for t in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def flatten_config(cfg: ExperimentConfig) -> dict:
    out = {}
    for f in fields(cfg):
        if f.name == "load":
            continue
        out[f.name] = _fmt(getattr(cfg, f.name))
    for key, attr in _LOAD_KEYS.items():
        out[key] = _fmt(getattr(cfg.load, attr))
    return out


def _convert(raw: str, current):
    raw = raw.strip()
    if isinstance(current, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        return tuple(float(t) for t in raw.replace(";", ",").split(",") if t.strip())
    return raw


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    entries = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        entries[key] = value
    return entries


def build_config(entries: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply string-valued entries to ``base`` (defaults if omitted)."""
    base = base or ExperimentConfig()
    top = {f.name: getattr(base, f.name) for f in fields(base) if f.name != "load"}
    load = {attr: getattr(base.load, attr) for attr in _LOAD_KEYS.values()}
    for key, raw in entries.items():
        try:
            if key in _LOAD_KEYS:
                attr = _LOAD_KEYS[key]
                load[attr] = _convert(raw, load[attr])
            elif key in top:
                top[key] = _convert(raw, top[key])
            else:
                raise ConfigError(f"unknown configuration key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    if len(load["weights"]) != 4:
        raise ConfigError("load_weights needs four numbers")
    if len(top["theta"]) != 2 or not np.hypot(*top["theta"]) > 0:
        raise ConfigError("theta needs two numbers, not both zero")
    return ExperimentConfig(load=LoadSpec(**load), **top)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read a config file and apply command-line overrides."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    entries = parse_config_text(text)
    entries.update(overrides or {})
    return build_config(entries)


# ---------------------------------------------------------------------------
# pipelines


def true_load(cfg: ExperimentConfig) -> np.ndarray:
    return make_load(cfg.load, cfg.grid)


def synthesize_dataset(Q, cfg: ExperimentConfig, part: str = "total"):
    """Forward-solve the dataset the configured Born approximation consumes."""
    if cfg.kind == "backscatter":
        return synthesize_backscatter(Q, cfg.grid, cfg.lame, cfg.chi_radius, cfg.solver, part,
                                      half_lattice=cfg.half_lattice, workers=cfg.workers)
    return synthesize_fixed_angle(Q, cfg.theta_vec, cfg.grid, cfg.lame, cfg.chi_radius,
                                  cfg.solver, part, regime=cfg.regime or None,
                                  workers=cfg.workers)


def synthesize_noisy(cfg: ExperimentConfig, Q=None):
    Q = true_load(cfg) if Q is None else Q
    data = synthesize_dataset(Q, cfg)
    return add_noise(data, cfg.noise, cfg.seed, cfg.noise_mode)


def born_from_dataset(data, cfg: ExperimentConfig) -> np.ndarray:
    if isinstance(data, BackscatterDataset):
        return born_backscatter(data, cfg.chi_radius, cfg.fill)
    return born_fixed_angle(data, cfg.chi_radius, cfg.fill, lame=cfg.lame)


def iterate_from_born(QB, cfg: ExperimentConfig, reference=None) -> IterationResult:
    if cfg.kind == "backscatter":
        return iterate_backscatter(QB, cfg.lame, cfg.grid, cfg.chi_radius, cfg.solver,
                                   cfg.iteration, reference, cfg.workers)
    return iterate_fixed_angle(QB, cfg.theta_vec, cfg.lame, cfg.grid, cfg.chi_radius, cfg.solver,
                               cfg.iteration, cfg.regime or None, reference, cfg.workers)


def run_iteration_experiment(cfg: ExperimentConfig) -> tuple[np.ndarray, IterationResult]:
    """Synthesize noisy data for the true load, reconstruct and refine it."""
    Q = true_load(cfg)
    data = synthesize_noisy(cfg, Q)
    QB = born_from_dataset(data, cfg)
    return Q, iterate_from_born(QB, cfg, Q)


__all__ = [
    "ConfigError", "ExperimentConfig", "LoadSpec", "add_noise", "born_from_dataset",
    "build_config", "iterate_from_born", "load_config", "make_load", "parse_config_text",
    "pattern_matrix", "pot1", "pot2", "lipschitz_diamond", "reconstruction_error",
    "relative_l2_error", "run_iteration_experiment", "synthesize_dataset", "synthesize_noisy",
    "true_load",
]
