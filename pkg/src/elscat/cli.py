"""Command-line entry point: ``elscat {forward,synth,born,iterate,validate}``.

Every subcommand reads an optional ``key = value`` config file; any key can
be overridden with ``--set key=value`` and the common ones have dedicated
flags.  Exit codes: 0 success, 1 failed validation, 2 solver failure or a
non-finite result, 3 configuration or input-format error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io as eio
from .experiments import (ConfigError, ExperimentConfig, born_from_dataset, build_config,
                          iterate_from_born, load_config, synthesize_noisy, true_load)
from .fixed_angle import FixedAngleDataset
from .forward import (PlaneWave, SolverError, channel_energy, far_field, incident_wave,
                      solve_lippmann_schwinger)

logger = logging.getLogger("elscat")

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_CONFIG = 0, 1, 2, 3


def _parse_sets(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _config(args) -> ExperimentConfig:
    overrides = _parse_sets(args.set)
    for flag in ("kind", "theta", "noise", "seed", "M", "N"):
        val = getattr(args, flag, None)
        if val is not None:
            overrides[flag] = str(val)
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.config:
        return load_config(args.config, overrides)
    return build_config(overrides)


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dataset(args, cfg):
    """The dataset and the config adjusted to it; a file's own geometry wins."""
    if not getattr(args, "data", None):
        return synthesize_noisy(cfg), cfg
    try:
        data = eio.read_dataset(args.data)
    except (OSError, eio.FormatError) as exc:
        raise ConfigError(str(exc)) from exc
    if data.provenance == "measured" and not cfg.support_radius:
        raise ConfigError("measured data need an explicit support_radius")
    changes = dict(lam=data.lame.lam, mu=data.lame.mu, R=data.grid.R, N=data.grid.N)
    if isinstance(data, FixedAngleDataset):
        changes.update(kind="fixed-angle", theta=tuple(map(float, data.theta)), regime=data.regime)
    else:
        changes.update(kind="backscatter")
    return data, replace(cfg, **changes)


def _angles(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad angle list {text!r}") from exc


def cmd_forward(args) -> int:
    cfg = _config(args)
    grid, lame = cfg.grid, cfg.lame
    Q = true_load(cfg)
    wave: PlaneWave = incident_wave(args.channel, args.omega, cfg.theta_vec)
    c = channel_energy(args.channel, args.omega, lame)
    res = solve_lippmann_schwinger(Q, wave, c, lame, grid, cfg.chi_radius, cfg.solver)
    out = _outdir(cfg)
    eio.write_field(out / "scattered.elsc", res.v, grid)
    rows = []
    for ang in _angles(args.receivers):
        zeta = np.array([np.cos(ang), np.sin(ang)])
        fp = far_field(Q, wave, res.v, "p", zeta, lame, c, grid)
        fs = far_field(Q, wave, res.v, "s", zeta, lame, c, grid)
        rows.append([ang, fp[0].real, fp[0].imag, fp[1].real, fp[1].imag,
                     fs[0].real, fs[0].imag, fs[1].real, fs[1].imag])
    header = ["angle", "re_p1", "im_p1", "re_p2", "im_p2", "re_s1", "im_s1", "re_s2", "im_s2"]
    eio.write_csv(out / "far_field.csv", header, rows, cfg.digest())
    print(f"solve: {res.method}, {res.iterations} iterations, residual {res.residual:.3e}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _config(args)
    data = synthesize_noisy(cfg)
    out = _outdir(cfg)
    suffix = "elbd" if cfg.kind == "backscatter" else "elfa"
    eio.write_dataset(out / f"dataset.{suffix}", data)
    eio.write_dataset_csv(out / "dataset.csv", data, cfg.digest())
    print(f"{cfg.kind} dataset: {data.entry_count} entries, {len(data.failures)} failures")
    return EXIT_SOLVER if data.failures else EXIT_OK


def cmd_born(args) -> int:
    cfg = _config(args)
    data, cfg = _dataset(args, cfg)
    QB = born_from_dataset(data, cfg)
    out = _outdir(cfg)
    eio.write_field(out / "born.elsc", QB, cfg.grid)
    Q = None if args.data and not args.true_load else true_load(cfg)
    eio.write_central_section(out / "central_section.csv", Q, QB, cfg.grid, cfg.digest())
    return EXIT_OK


def cmd_iterate(args) -> int:
    cfg = _config(args)
    data, cfg = _dataset(args, cfg)
    QB = born_from_dataset(data, cfg)
    Q = true_load(cfg) if args.true_load else None
    result = iterate_from_born(QB, cfg, Q)
    out = _outdir(cfg)
    for n, Qn in enumerate(result.iterates, 1):
        eio.write_field(out / f"iterate_{n}.elsc", Qn, cfg.grid)
    if Q is not None:
        values, column = result.errors, "error"
    else:
        values, column = result.update_norms, "update"
    eio.write_error_history(out / f"{column}.csv", values, column, cfg.digest())
    for n, v in enumerate(values, 1):
        print(f"n={n} {column}={v:.6e}")
    if result.failed:
        print(f"iteration stopped: {result.message}", file=sys.stderr)
        return EXIT_SOLVER
    if not np.all(np.isfinite(values)):
        print("non-finite value in the iteration history", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_validation

    results = run_validation(args.only)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  value={r.value:.3e}  tol={r.tolerance:.1e}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        eio.write_csv(out / "validate.csv", ["check", "value", "tolerance", "passed"],
                      [(r.name, r.value, r.tolerance, r.passed) for r in results], "none")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elscat", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")
        p.add_argument("--out", help="output directory")
        return p

    p = common(sub.add_parser("forward", help="one Lippmann-Schwinger solve"))
    p.add_argument("--channel", choices=("pp", "ps", "sp", "ss"), default="pp")
    p.add_argument("--omega", type=float, default=2.0)
    p.add_argument("--theta", help="incident direction 'a,b'")
    p.add_argument("--receivers", default="0", help="comma-separated receiver angles (radians)")
    p.set_defaults(func=cmd_forward)

    p = common(sub.add_parser("synth", help="synthesize a dataset"))
    p.add_argument("--kind", choices=("backscatter", "fixed-angle"))
    p.add_argument("--theta", help="fixed incident direction 'a,b'")
    p.add_argument("--noise", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    for name, func, text in (("born", cmd_born, "Born approximation from a dataset"),
                             ("iterate", cmd_iterate, "Born approximation plus refinement")):
        p = common(sub.add_parser(name, help=text))
        p.add_argument("--data", help="dataset file (synthesized from the config if omitted)")
        p.add_argument("--kind", choices=("backscatter", "fixed-angle"))
        p.add_argument("--theta")
        p.add_argument("--noise", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--true-load", action="store_true",
                       help="compare with the configured load")
        if name == "iterate":
            p.add_argument("--M", type=int, help="number of refinement steps")
        p.set_defaults(func=func)

    p = sub.add_parser("validate", help="run the oracle-validation suite")
    p.add_argument("--out", help="directory for validate.csv")
    p.add_argument("--only", nargs="*", help="restrict to these checks")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
