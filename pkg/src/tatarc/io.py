"""Binary, CSV and PGM serialisation for sinograms, projections and images.

Binary layout (little-endian)::

    b"TATD0001"
    u32 record type            1 sinogram, 2 radon data, 3 image
    u32 dims[2]                slow axis first
    f64 origin0, spacing0, origin1, spacing1
    u32 n_meta, n_meta bytes   UTF-8 ``key=value`` lines (kind, padding, ...)
    f64 payload                row-major, dims[0] x dims[1]
"""
from __future__ import annotations

import os
import re
import struct
import tempfile
from pathlib import Path

import numpy as np

from .grids import AngularGrid, Image, ImageGrid, RadonData, RadonGrid, Sinogram, TimeGrid

__all__ = [
    "MAGIC",
    "FormatError",
    "atomic_write",
    "write_record",
    "read_record",
    "to_bytes",
    "from_bytes",
    "write_csv",
    "write_pgm",
    "read_pgm",
]

MAGIC = b"TATD0001"
REC_SINOGRAM, REC_RADON, REC_IMAGE = 1, 2, 3
_HEAD = struct.Struct("<8sIII4d")


class FormatError(ValueError):
    pass


def atomic_write(path, data: bytes) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _layout(obj):
    if isinstance(obj, Sinogram):
        g, a = obj.grid_t, obj.grid_theta
        meta = {
            "n_samples": g.n_samples,
            "n_padded": g.n_padded,
            "delta2": repr(float(obj.delta2)),
            "radius": repr(float(obj.radius)),
            "zero_tail": int(obj.zero_tail),
        }
        return REC_SINOGRAM, (0.0, a.dtheta, g.t0, g.dt), meta, obj.values
    if isinstance(obj, RadonData):
        g = obj.grid
        return REC_RADON, (0.0, g.dalpha, g.p0, g.dp), {"kind": obj.kind}, obj.values
    if isinstance(obj, Image):
        g = obj.grid
        return REC_IMAGE, (g.y_axis()[0], g.hy, g.x_axis()[0], g.hx), {"extent": repr(float(g.extent))}, obj.values
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_bytes(obj) -> bytes:
    rec, axes, meta, values = _layout(obj)
    v = np.ascontiguousarray(values, dtype="<f8")
    text = "".join(f"{k}={val}\n" for k, val in meta.items()).encode("utf-8")
    head = _HEAD.pack(MAGIC, rec, v.shape[0], v.shape[1], *axes)
    return head + struct.pack("<I", len(text)) + text + v.tobytes()


def from_bytes(buf: bytes):
    if len(buf) < _HEAD.size + 4:
        raise FormatError("file too short for a TATD header")
    magic, rec, n0, n1, o0, s0, o1, s1 = _HEAD.unpack_from(buf, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    off = _HEAD.size
    (n_meta,) = struct.unpack_from("<I", buf, off)
    off += 4
    meta = dict(line.split("=", 1) for line in buf[off : off + n_meta].decode("utf-8").splitlines() if line)
    off += n_meta
    if len(buf) - off != 8 * n0 * n1:
        raise FormatError(f"payload has {len(buf) - off} bytes, expected {8 * n0 * n1}")
    values = np.frombuffer(buf, dtype="<f8", count=n0 * n1, offset=off).reshape(n0, n1).astype(np.float64)
    if rec == REC_SINOGRAM:
        grid_t = TimeGrid(int(meta["n_samples"]), s1, o1, n1, int(meta["n_padded"]))
        return Sinogram(
            grid_t,
            AngularGrid(n0),
            values,
            delta2=float(meta["delta2"]),
            radius=float(meta["radius"]),
            zero_tail=bool(int(meta["zero_tail"])),
        )
    if rec == REC_RADON:
        return RadonData(RadonGrid(n0, n1, o1, s1), values, meta["kind"])
    if rec == REC_IMAGE:
        return Image(ImageGrid(n1, n0, float(meta["extent"])), values)
    raise FormatError(f"unknown record type {rec}")


def write_record(path, obj) -> None:
    atomic_write(path, to_bytes(obj))


def read_record(path):
    return from_bytes(Path(path).read_bytes())


def write_csv(path, obj) -> None:
    """Same layout as the binary payload: one row per slow-axis sample, header holds the fast axis."""
    rec, (o0, s0, o1, s1), _, values = _layout(obj)
    names = {REC_SINOGRAM: ("theta", "t"), REC_RADON: ("alpha", "p"), REC_IMAGE: ("y", "x")}[rec]
    fast = o1 + s1 * np.arange(values.shape[1])
    slow = o0 + s0 * np.arange(values.shape[0])
    lines = [f"{names[0]}/{names[1]}," + ",".join(repr(float(x)) for x in fast)]
    lines += [repr(float(a)) + "," + ",".join(repr(float(x)) for x in row) for a, row in zip(slow, values)]
    atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_pgm(path, img: Image, vmin: float | None = None, vmax: float | None = None) -> tuple[float, float]:
    """16-bit binary PGM; ``[vmin, vmax]`` maps to ``[0, 65535]`` and goes to ``<path>.txt``.

    The top row of the picture is the largest ``y``.
    """
    v = img.values
    lo = float(v.min()) if vmin is None else float(vmin)
    hi = float(v.max()) if vmax is None else float(vmax)
    span = hi - lo if hi > lo else 1.0
    q = np.rint(np.clip((v - lo) / span, 0.0, 1.0) * 65535.0).astype(">u2")[::-1]
    head = f"P5\n{img.grid.n_x} {img.grid.n_y}\n65535\n".encode("ascii")
    atomic_write(path, head + q.tobytes())
    atomic_write(str(path) + ".txt", f"min={lo!r}\nmax={hi!r}\n".encode("utf-8"))
    return lo, hi


def read_pgm(path) -> tuple[np.ndarray, float, float]:
    """Inverse of :func:`write_pgm` up to quantisation; returns (values, min, max)."""
    raw = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if m is None or int(m.group(3)) != 65535:
        raise FormatError("not a 16-bit P5 PGM")
    w, h = int(m.group(1)), int(m.group(2))
    q = np.frombuffer(raw, dtype=">u2", count=w * h, offset=m.end()).reshape(h, w)[::-1]
    side = dict(line.split("=", 1) for line in Path(str(path) + ".txt").read_text().splitlines() if line)
    lo, hi = float(side["min"]), float(side["max"])
    return lo + q.astype(np.float64) / 65535.0 * (hi - lo), lo, hi
