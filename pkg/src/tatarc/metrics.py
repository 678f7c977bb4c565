"""Error norms, a spectral smoothness score and consistency checks for projections."""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass

import numpy as np

from .grids import GridError, Image, RadonData

__all__ = [
    "REGIONS",
    "region_mask",
    "rel_error",
    "smooth_disk_window",
    "smoothness_diagnostic",
    "ConsistencyReport",
    "projection_consistency",
    "format_report",
    "csv_row",
]

REGIONS = ("unit_disk", "upper_half", "all")


def region_mask(img: Image, region: str = "unit_disk") -> np.ndarray:
    X, Y = img.grid.mesh()
    if region == "unit_disk":
        return X**2 + Y**2 < 1.0
    if region == "upper_half":
        return (X**2 + Y**2 < 1.0) & (Y > 0)
    if region == "all":
        return np.ones(X.shape, dtype=bool)
    raise ValueError(f"unknown region {region!r}; expected one of {REGIONS}")


def rel_error(a: Image, ref: Image, norm: str = "L2", region: str = "unit_disk") -> float:
    """``||a - ref|| / ||ref||`` over the pixels of ``region``."""
    if a.grid != ref.grid:
        raise GridError("rel_error: image grids differ")
    m = region_mask(ref, region)
    d = a.values[m] - ref.values[m]
    r = ref.values[m]
    if norm == "L2":
        num, den = np.linalg.norm(d), np.linalg.norm(r)
    elif norm == "Linf":
        num, den = np.abs(d).max(initial=0.0), np.abs(r).max(initial=0.0)
    else:
        raise ValueError(f"unknown norm {norm!r}")
    if den == 0:
        raise ValueError("rel_error: reference has zero norm on the region")
    return float(num / den)


def _smoothstep(u):
    # C-infinity transition from 0 (u <= 0) to 1 (u >= 1)
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return a / (a + b)


def smooth_disk_window(img: Image, r_in: float = 0.8, r_out: float = 0.95) -> np.ndarray:
    """1 inside ``r_in``, 0 outside ``r_out``, infinitely smooth in between."""
    X, Y = img.grid.mesh()
    r = np.hypot(X, Y)
    return 1.0 - _smoothstep((r - r_in) / (r_out - r_in))


def smoothness_diagnostic(diff: Image, cutoff_fraction: float = 0.5, r_in: float = 0.8, r_out: float = 0.95) -> float:
    """Fraction of the windowed image's spectral energy above ``cutoff_fraction`` of Nyquist.

    Radial frequency is measured in units of the Nyquist frequency of the
    finer pixel axis, so the corners of the spectrum exceed 1.
    """
    if not 0 < cutoff_fraction < 1:
        raise ValueError("cutoff_fraction must be in (0, 1)")
    v = diff.values * smooth_disk_window(diff, r_in, r_out)
    power = np.abs(np.fft.fft2(v)) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    fy = np.fft.fftfreq(diff.grid.n_y) * 2.0
    fx = np.fft.fftfreq(diff.grid.n_x) * 2.0
    rad = np.hypot(fy[:, None], fx[None, :])
    return float(power[rad > cutoff_fraction].sum() / total)


@dataclass(frozen=True)
class ConsistencyReport:
    mass_mean: float
    mass_deviation: float
    symmetry_defect: float

    def as_dict(self) -> dict:
        return asdict(self)


def projection_consistency(data: RadonData) -> ConsistencyReport:
    """Moment (``int F dp`` independent of direction) and ``F(w, p) = F(-w, -p)`` checks.

    Derivative kinds are odd under the reflection, so for them the defect
    is measured against ``-F'(-w, -p)`` and the moments should all vanish.
    The symmetry defect needs an even number of directions and a symmetric
    p grid; otherwise it is reported as NaN.
    """
    g = data.grid
    v = data.values
    # trapezoid weights; end samples normally vanish anyway
    w = np.full(g.n_p, g.dp)
    w[0] = w[-1] = 0.5 * g.dp
    mass = v @ w
    mean = float(mass.mean())
    dev = float(np.abs(mass - mean).max())
    if g.n_alpha % 2 == 0 and g.is_p_symmetric():
        sign = -1.0 if data.is_derivative else 1.0
        flipped = sign * np.roll(v, -g.n_alpha // 2, axis=0)[:, ::-1]
        sym = float(np.abs(v - flipped).max())
    else:
        sym = float("nan")
    return ConsistencyReport(mean, dev, sym)


def format_report(metrics: dict) -> str:
    """``key=value`` lines in insertion order."""
    return "".join(f"{k}={_fmt(v)}\n" for k, v in metrics.items())


def csv_row(metrics: dict, header: bool = True) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    if header:
        wr.writerow(list(metrics))
    wr.writerow([_fmt(v) for v in metrics.values()])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)
