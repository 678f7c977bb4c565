"""Filtered backprojection for 2D Radon data on ``S^1 x [p0, p_last]``.

The inverse is ``f = (1 / 4 pi) R^# (|sigma| F)``, where ``|sigma|`` acts in
``p`` and ``R^# h(x) = int_0^{2 pi} h(omega(alpha), omega . x) d alpha``.
For data already differentiated in ``p`` the same multiplier is reached
with the Hilbert transform, ``|sigma| = (-i sgn sigma)(i sigma)``.  Both
multipliers are realised through band-limited spatial kernels
(Ram-Lak and the discrete Hilbert kernel), so the DC term is handled
exactly; linear convolution is enforced by zero padding.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .grids import Image, ImageGrid, RadonData, next_pow2

__all__ = [
    "FilterSpec",
    "filter_projections",
    "backproject",
    "backproject_points",
    "invert",
    "radon_transform",
    "spectral_derivative",
]

_FROM_F = {"F", "Ftilde", "G"}
_FROM_DF = {"dF/dp", "dFtilde/dp", "dG/dp"}


@dataclass(frozen=True)
class FilterSpec:
    """``variant`` is ``"from_F"`` or ``"from_dF"``; ``rolloff`` tapers the top fraction of the band."""

    variant: str = "from_F"
    pad_factor: int = 2
    rolloff: float = 0.0

    def __post_init__(self):
        if self.variant not in ("from_F", "from_dF"):
            raise ValueError(f"unknown filter variant {self.variant!r}")
        if self.pad_factor < 2:
            raise ValueError("pad_factor must be >= 2")
        if not 0.0 <= self.rolloff < 1.0:
            raise ValueError("rolloff must be in [0, 1)")

    @classmethod
    def for_kind(cls, kind: str, **kw) -> "FilterSpec":
        return cls("from_dF" if kind in _FROM_DF else "from_F", **kw)


def _kernel(variant: str, n: int, dp: float) -> np.ndarray:
    """Circularly stored kernel samples times ``dp`` (so a plain sum is the convolution)."""
    off = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
    odd = off % 2 == 1
    k = np.zeros(n)
    with np.errstate(divide="ignore"):
        if variant == "from_F":
            k[odd] = -2.0 / (np.pi * off[odd].astype(float) ** 2 * dp)
            k[0] = np.pi / (2.0 * dp)
        else:
            k[odd] = 2.0 / (np.pi * off[odd].astype(float))
    return k


def _multiplier(spec: FilterSpec, n: int, dp: float) -> np.ndarray:
    m = np.fft.fft(_kernel(spec.variant, n, dp)) / (4 * np.pi)
    if spec.rolloff > 0:
        frac = np.abs(np.fft.fftfreq(n)) * 2.0  # 1 at Nyquist
        start = 1.0 - spec.rolloff
        u = np.clip((frac - start) / spec.rolloff, 0.0, 1.0)
        m = m * 0.5 * (1.0 + np.cos(np.pi * u))
    return m


def filter_projections(data: RadonData, spec: FilterSpec | None = None) -> RadonData:
    """Apply the ``|sigma| / (4 pi)`` filter along ``p`` for every direction."""
    spec = FilterSpec.for_kind(data.kind) if spec is None else spec
    if spec.variant == "from_F" and data.kind not in _FROM_F:
        raise ValueError(f"from_F filter cannot take data of kind {data.kind!r}")
    if spec.variant == "from_dF" and data.kind not in _FROM_DF:
        raise ValueError(f"from_dF filter cannot take data of kind {data.kind!r}")
    g = data.grid
    n = next_pow2(spec.pad_factor * g.n_p)
    mult = _multiplier(spec, n, g.dp)
    out = np.fft.ifft(np.fft.fft(data.values, n=n, axis=1) * mult[None, :], axis=1)
    return data.with_values(out.real[:, : g.n_p])


def _backproject_at(values, grid, x, y):
    acc = np.zeros(np.broadcast_shapes(x.shape, y.shape))
    alpha = grid.alpha_axis()
    n_p = grid.n_p
    for q in range(grid.n_alpha):
        pos = (x * np.cos(alpha[q]) + y * np.sin(alpha[q]) - grid.p0) / grid.dp
        i0 = np.floor(pos).astype(np.int64)
        frac = pos - i0
        ok = (i0 >= 0) & (i0 < n_p - 1)
        i0c = np.clip(i0, 0, n_p - 2)
        row = values[q]
        val = row[i0c] * (1.0 - frac) + row[i0c + 1] * frac
        # the last sample is hit exactly only at pos == n_p - 1
        edge = i0 == n_p - 1
        val = np.where(edge, row[-1], val)
        acc += np.where(ok | edge, val, 0.0)
    return acc * grid.dalpha


def backproject_points(filtered: RadonData, x, y) -> np.ndarray:
    """:func:`backproject` evaluated at arbitrary points ``(x, y)``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return _backproject_at(filtered.values, filtered.grid, x, y)


def backproject(filtered: RadonData, grid: ImageGrid, workers: int = 1, rows_per_task: int = 32) -> Image:
    """``sum_q h(alpha_q, omega_q . x) * dalpha`` with linear interpolation in ``p``.

    Offsets outside the stored ``p`` range contribute zero.  Rows are split
    into fixed tasks, so the result does not depend on ``workers``.
    """
    starts = list(range(0, grid.n_y, rows_per_task))
    xs = grid.x_axis()[None, :]
    ys = grid.y_axis()

    def one(lo):
        return _backproject_at(filtered.values, filtered.grid, xs, ys[lo : lo + rows_per_task, None])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(one, starts))
    else:
        parts = [one(lo) for lo in starts]
    return Image(grid, np.vstack(parts))


def invert(data: RadonData, grid: ImageGrid, spec: FilterSpec | None = None, workers: int = 1) -> Image:
    """Filtered backprojection; accepts F-type or dF/dp-type data."""
    if data.kind not in _FROM_F | _FROM_DF:
        raise ValueError(f"cannot invert data of kind {data.kind!r}")
    return backproject(filter_projections(data, spec), grid, workers=workers)


def spectral_derivative(data: RadonData, pad_factor: int = 2) -> RadonData:
    """d/dp by the band-limited derivative kernel on the zero-padded grid."""
    g = data.grid
    n = next_pow2(pad_factor * g.n_p)
    off = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
    k = np.zeros(n)
    nz = off != 0
    # samples of the band-limited differentiator: (-1)^n / (n dp)
    k[nz] = np.where(off[nz] % 2 == 0, 1.0, -1.0) / (off[nz] * g.dp)
    out = np.fft.ifft(np.fft.fft(data.values, n=n, axis=1) * np.fft.fft(k)[None, :], axis=1)
    kind = {"F": "dF/dp", "Ftilde": "dFtilde/dp", "G": "dG/dp"}[data.kind]
    return data.with_values(out.real[:, : g.n_p], kind)


def radon_transform(image: Image, grid) -> RadonData:
    """Discrete Radon transform of a pixel image (adjoint of :func:`backproject` up to weights).

    Each pixel's mass is split linearly between the two nearest p samples;
    the result approximates line integrals with p-spacing ``grid.dp``.
    """
    ig = image.grid
    X, Y = ig.mesh()
    vals = image.values.ravel()
    out = np.zeros((grid.n_alpha, grid.n_p))
    area = ig.hx * ig.hy
    for q, a in enumerate(grid.alpha_axis()):
        pos = ((X * np.cos(a) + Y * np.sin(a)).ravel() - grid.p0) / grid.dp
        i0 = np.floor(pos).astype(np.int64)
        frac = pos - i0
        for idx, wgt in ((i0, 1.0 - frac), (i0 + 1, frac)):
            ok = (idx >= 0) & (idx < grid.n_p)
            out[q] += np.bincount(idx[ok], weights=vals[ok] * wgt[ok], minlength=grid.n_p)
    return RadonData(grid, out * area / grid.dp, "F")
