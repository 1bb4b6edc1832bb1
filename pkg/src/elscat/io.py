"""Binary and CSV formats for fields, datasets and run histories.

All binary formats are little-endian.  Fields (magic ``ELSC``) have a
64-byte header followed by row-major complex doubles.  Backscattering
(``ELBD``) and fixed-angle (``ELFA``) datasets have a 64-byte header followed
by one fixed-size record per lattice index.  CSV files start with a comment
line holding the configuration digest and the package version, then a
header row.  Nothing time-dependent is written, so equal inputs give equal
bytes.
"""

from __future__ import annotations

import csv
import io as _io
import struct
from pathlib import Path

import numpy as np

from .backscatter import BackscatterDataset
from .fixed_angle import FixedAngleDataset
from .forward import LameParams
from .grid import GridSpec

FORMAT_VERSION = 1
HEADER_SIZE = 64

_FIELD_HEAD = struct.Struct("<4sIIdII")            # magic, version, N, R, ncomp, rank
_BD_HEAD = struct.Struct("<4sIIddddII")             # magic, version, N, R, lam, mu, noise, count, prov
_FA_HEAD = struct.Struct("<4sHBBIIdddddd")         # magic, version, regime, prov, N, count,
                                                    # R, lam, mu, theta1, theta2, noise

_BD_RECORD = np.dtype([("j1", "<i4"), ("j2", "<i4"), ("v", "<c16", (4,))])
_FA_RECORD = np.dtype([("j1", "<i4"), ("j2", "<i4"), ("quadrant", "i1"), ("dir_a", "i1"),
                       ("dir_b", "i1"), ("measured", "u1"), ("v", "<c16", (4,))])

_PROVENANCE = ("synthetic", "synthetic+noise", "measured")


class FormatError(ValueError):
    """A file does not match the expected layout."""


def version_string() -> str:
    from . import __version__

    return f"elscat-v{__version__}"


def _pad(head: bytes) -> bytes:
    if len(head) > HEADER_SIZE:
        raise AssertionError("header overflow")
    return head + b"\0" * (HEADER_SIZE - len(head))


def _read_header(raw: bytes, fmt: struct.Struct, magic: bytes, path) -> tuple:
    if len(raw) < HEADER_SIZE:
        raise FormatError(f"{path}: file shorter than its header")
    vals = fmt.unpack_from(raw, 0)
    if vals[0] != magic:
        raise FormatError(f"{path}: bad magic {vals[0]!r}, expected {magic!r}")
    if vals[1] != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {vals[1]}")
    return vals


# ---------------------------------------------------------------------------
# fields


def write_field(path, values, grid: GridSpec) -> None:
    """Store nodal values of shape ``(N, N)``, ``(2, N, N)`` or ``(2, 2, N, N)``."""
    values = np.asarray(values, dtype="<c16")
    if values.shape[-2:] != (grid.N, grid.N) or values.ndim > 4:
        raise ValueError(f"field shape {values.shape} does not fit an {grid.N}x{grid.N} grid")
    rank = values.ndim - 2
    ncomp = int(np.prod(values.shape[:-2], dtype=int))
    head = _FIELD_HEAD.pack(b"ELSC", FORMAT_VERSION, grid.N, grid.R, ncomp, rank)
    Path(path).write_bytes(_pad(head) + np.ascontiguousarray(values).tobytes())


def read_field(path) -> tuple[np.ndarray, GridSpec]:
    raw = Path(path).read_bytes()
    _, _, N, R, ncomp, rank = _read_header(raw, _FIELD_HEAD, b"ELSC", path)
    lead = {0: (), 1: (2,), 2: (2, 2)}.get(rank)
    if lead is None or int(np.prod(lead, dtype=int)) != ncomp:
        raise FormatError(f"{path}: inconsistent component layout")
    body = raw[HEADER_SIZE:]
    if len(body) != 16 * ncomp * N * N:
        raise FormatError(f"{path}: payload has {len(body)} bytes, expected {16 * ncomp * N * N}")
    values = np.frombuffer(body, dtype="<c16").reshape(lead + (N, N)).astype(np.complex128)
    return values, GridSpec(R, N)


def _component_labels(lead: tuple) -> list[str]:
    if lead == ():
        return [""]
    if lead == (2,):
        return ["1", "2"]
    return ["11", "12", "21", "22"]


def _csv_text(header: list[str], rows, digest: str) -> str:
    buf = _io.StringIO()
    buf.write(f"# config_hash={digest} version={version_string()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_num(v) for v in row])
    return buf.getvalue()


def _num(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header: list[str], rows, digest: str = "none") -> None:
    """Write a CSV with the provenance comment line and a header row."""
    Path(path).write_text(_csv_text(header, rows, digest), encoding="utf-8")


def read_csv(path) -> tuple[str, list[str], np.ndarray]:
    """Return ``(comment, header, data)`` for an all-numeric CSV."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#"):
        raise FormatError(f"{path}: missing provenance comment")
    header = lines[1].split(",")
    data = np.array([[float(t) for t in ln.split(",")] for ln in lines[2:] if ln],
                    dtype=float).reshape(-1, len(header))
    return lines[0], header, data


def write_field_csv(path, values, grid: GridSpec, digest: str = "none") -> None:
    """Plot-friendly export: ``x1, x2`` then real and imaginary part per component."""
    values = np.asarray(values)
    lead = values.shape[:-2]
    labels = _component_labels(lead)
    header = ["x1", "x2"]
    for lab in labels:
        header += [f"re{lab}", f"im{lab}"]
    flat = values.reshape((-1, grid.N, grid.N))
    x1, x2 = grid.mesh
    rows = []
    for a in range(grid.N):
        for b in range(grid.N):
            row = [x1[a, b], x2[a, b]]
            for c in range(flat.shape[0]):
                row += [flat[c, a, b].real, flat[c, a, b].imag]
            rows.append(row)
    write_csv(path, header, rows, digest)


# ---------------------------------------------------------------------------
# datasets


def _prov_code(p: str) -> int:
    try:
        return _PROVENANCE.index(p)
    except ValueError:
        raise ValueError(f"unknown provenance {p!r}") from None


def write_backscatter_dataset(path, data: BackscatterDataset) -> None:
    """One record ``(j1, j2, vp1, vp2, vs1, vs2)`` per measured lattice index."""
    g = data.grid
    pos = np.argwhere(data.measured)
    rec = np.zeros(len(pos), dtype=_BD_RECORD)
    rec["j1"] = g.index[pos[:, 0]]
    rec["j2"] = g.index[pos[:, 1]]
    rec["v"][:, :2] = data.vp[pos[:, 0], pos[:, 1]]
    rec["v"][:, 2:] = data.vs[pos[:, 0], pos[:, 1]]
    head = _BD_HEAD.pack(b"ELBD", FORMAT_VERSION, g.N, g.R, data.lame.lam, data.lame.mu,
                         data.noise_level, len(rec), _prov_code(data.provenance))
    Path(path).write_bytes(_pad(head) + rec.tobytes())


def read_backscatter_dataset(path) -> BackscatterDataset:
    raw = Path(path).read_bytes()
    _, _, N, R, lam, mu, noise, count, prov = _read_header(raw, _BD_HEAD, b"ELBD", path)
    rec = _records(raw, _BD_RECORD, count, path)
    grid = GridSpec(R, N)
    a, b = _positions(grid, rec, path)
    vp = np.zeros((N, N, 2), complex)
    vs = np.zeros((N, N, 2), complex)
    measured = np.zeros((N, N), bool)
    vp[a, b] = rec["v"][:, :2]
    vs[a, b] = rec["v"][:, 2:]
    measured[a, b] = True
    return BackscatterDataset(grid, LameParams(lam, mu), vp, vs, measured, noise,
                              _PROVENANCE[prov])


def write_fixed_angle_dataset(path, data: FixedAngleDataset) -> None:
    """One record per lattice index, including the excluded ones (quadrant 0)."""
    g = data.grid
    N = g.N
    rec = np.zeros(N * N, dtype=_FA_RECORD)
    J1, J2 = np.meshgrid(g.index, g.index, indexing="ij")
    rec["j1"] = J1.ravel()
    rec["j2"] = J2.ravel()
    rec["quadrant"] = data.quadrant.ravel()
    rec["dir_a"] = data.dir_a.ravel()
    rec["dir_b"] = data.dir_b.ravel()
    rec["measured"] = data.measured.ravel()
    rec["v"][:, :2] = data.va.reshape(-1, 2)
    rec["v"][:, 2:] = data.vb.reshape(-1, 2)
    theta = np.asarray(data.theta, dtype=float)
    head = _FA_HEAD.pack(b"ELFA", FORMAT_VERSION, ord(data.regime), _prov_code(data.provenance),
                         N, len(rec), g.R, data.lame.lam, data.lame.mu, theta[0], theta[1],
                         data.noise_level)
    Path(path).write_bytes(_pad(head) + rec.tobytes())


def read_fixed_angle_dataset(path) -> FixedAngleDataset:
    raw = Path(path).read_bytes()
    (_, _, regime, prov, N, count, R, lam, mu, t1, t2,
     noise) = _read_header(raw, _FA_HEAD, b"ELFA", path)
    rec = _records(raw, _FA_RECORD, count, path)
    grid = GridSpec(R, N)
    a, b = _positions(grid, rec, path)
    shape = (N, N)
    quadrant = np.zeros(shape, np.int8)
    dir_a = np.zeros(shape, np.int8)
    dir_b = np.zeros(shape, np.int8)
    measured = np.zeros(shape, bool)
    va = np.zeros(shape + (2,), complex)
    vb = np.zeros(shape + (2,), complex)
    quadrant[a, b] = rec["quadrant"]
    dir_a[a, b] = rec["dir_a"]
    dir_b[a, b] = rec["dir_b"]
    measured[a, b] = rec["measured"].astype(bool)
    va[a, b] = rec["v"][:, :2]
    vb[a, b] = rec["v"][:, 2:]
    return FixedAngleDataset(grid, LameParams(lam, mu), (t1, t2), chr(regime), va, vb, dir_a,
                             dir_b, quadrant, measured, noise, _PROVENANCE[prov])


def _records(raw: bytes, dtype, count: int, path) -> np.ndarray:
    body = raw[HEADER_SIZE:]
    if len(body) != count * dtype.itemsize:
        raise FormatError(f"{path}: expected {count} records")
    return np.frombuffer(body, dtype=dtype)


def _positions(grid: GridSpec, rec, path):
    half = grid.N // 2
    j1 = rec["j1"].astype(int)
    j2 = rec["j2"].astype(int)
    if np.any((j1 < -half) | (j1 >= half) | (j2 < -half) | (j2 >= half)):
        raise FormatError(f"{path}: lattice index out of range")
    return j1 + half, j2 + half


def write_dataset(path, data) -> None:
    if isinstance(data, BackscatterDataset):
        write_backscatter_dataset(path, data)
    elif isinstance(data, FixedAngleDataset):
        write_fixed_angle_dataset(path, data)
    else:
        raise TypeError(f"unsupported dataset type {type(data).__name__}")


def read_dataset(path):
    """Read either dataset format, dispatching on the magic bytes."""
    magic = Path(path).read_bytes()[:4]
    if magic == b"ELBD":
        return read_backscatter_dataset(path)
    if magic == b"ELFA":
        return read_fixed_angle_dataset(path)
    raise FormatError(f"{path}: unknown dataset magic {magic!r}")


def write_dataset_csv(path, data, digest: str = "none") -> None:
    """CSV mirror of a dataset: index, frequency, tags and the stored vectors."""
    g = data.grid
    fixed = isinstance(data, FixedAngleDataset)
    names = ("a", "b") if fixed else ("p", "s")
    header = ["j1", "j2", "xi1", "xi2"]
    if fixed:
        header += ["quadrant", "dir_a", "dir_b", "measured"]
    for n in names:
        header += [f"re_v{n}1", f"im_v{n}1", f"re_v{n}2", f"im_v{n}2"]
    first, second = data.vectors()
    rows = []
    for a in range(g.N):
        for b in range(g.N):
            if not fixed and not data.measured[a, b]:
                continue
            row = [int(g.index[a]), int(g.index[b]), g.freqs[a], g.freqs[b]]
            if fixed:
                row += [int(data.quadrant[a, b]), int(data.dir_a[a, b]), int(data.dir_b[a, b]),
                        int(data.measured[a, b])]
            for v in (first[a, b], second[a, b]):
                row += [v[0].real, v[0].imag, v[1].real, v[1].imag]
            rows.append(row)
    write_csv(path, header, rows, digest)


# ---------------------------------------------------------------------------
# run outputs


def write_error_history(path, values, column: str = "error", digest: str = "none") -> None:
    """``n,<column>`` rows, ``n`` starting at 1."""
    write_csv(path, ["n", column], [(n, v) for n, v in enumerate(values, 1)], digest)


def central_section(values, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Samples along ``x2 = 0`` as ``(x1, values[..., :, row])``."""
    return grid.nodes, np.asarray(values)[..., :, grid.N // 2]


def write_central_section(path, Q, QB, grid: GridSpec, digest: str = "none") -> None:
    """``x1, Q11, ReQB11`` along ``x2 = 0``; ``Q`` may be None (written as NaN)."""
    x1, qb = central_section(np.real(QB[0, 0]), grid)
    if Q is None:
        q = np.full(grid.N, np.nan)
    else:
        q = central_section(np.real(Q[0, 0]), grid)[1]
    write_csv(path, ["x1", "Q11", "ReQB11"], zip(x1, q, qb), digest)
