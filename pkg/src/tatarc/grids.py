"""Sample grids and the immutable containers passed between pipeline stages.

Every axis is stored implicitly as origin, spacing and count so that files
round-trip bit-exactly; the ``*_axis`` helpers rebuild the sample positions.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "TimeGrid",
    "AngularGrid",
    "FrequencyGrid",
    "RadonGrid",
    "ImageGrid",
    "Sinogram",
    "RadonData",
    "Image",
    "RADON_KINDS",
    "GridError",
    "is_pow2",
    "next_pow2",
    "window_p",
    "extend_time",
]

RADON_KINDS = ("F", "dF/dp", "Ftilde", "dFtilde/dp", "G", "dG/dp")


class GridError(ValueError):
    """Inconsistent or out-of-range grid request."""


def is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _frozen(a, dtype=np.float64) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time samples ``t_i = t0 + i * dt``.

    ``n_samples`` covers the measurement window ``[t0, T)`` with
    ``T = t0 + n_samples * dt``; ``n_extended`` adds the cut-off tail and
    ``n_padded`` is the FFT length after zero padding.
    """

    n_samples: int
    dt: float
    t0: float = 0.0
    n_extended: int | None = None
    n_padded: int | None = None

    def __post_init__(self):
        if self.n_samples <= 0:
            raise GridError("n_samples must be positive")
        if not self.dt > 0:
            raise GridError("dt must be positive")
        if self.n_extended is None:
            object.__setattr__(self, "n_extended", self.n_samples)
        if self.n_padded is None:
            object.__setattr__(self, "n_padded", next_pow2(4 * self.n_extended))
        if self.n_extended < self.n_samples:
            raise GridError("n_extended must be >= n_samples")
        if self.n_padded < self.n_extended:
            raise GridError("n_padded must be >= n_extended")
        if not is_pow2(self.n_padded):
            raise GridError("n_padded must be a power of two")

    @classmethod
    def over(cls, T: float = 2.0, n_samples: int = 256, **kw) -> "TimeGrid":
        """Grid with ``n_samples`` samples on ``[0, T)``."""
        return cls(n_samples=n_samples, dt=T / n_samples, **kw)

    @property
    def T(self) -> float:
        return self.t0 + self.n_samples * self.dt

    @property
    def t_end(self) -> float:
        return self.t0 + self.n_extended * self.dt

    def axis(self, extended: bool = True) -> np.ndarray:
        n = self.n_extended if extended else self.n_samples
        return self.t0 + self.dt * np.arange(n)

    def frequency_grid(self) -> "FrequencyGrid":
        return FrequencyGrid(dlambda=2 * np.pi / (self.n_padded * self.dt), l_nyq=self.n_padded // 2)


@dataclass(frozen=True)
class AngularGrid:
    """``m_detectors`` equispaced detector angles ``2 pi j / M`` on the unit circle."""

    m_detectors: int

    def __post_init__(self):
        if self.m_detectors <= 0 or self.m_detectors % 2:
            raise GridError("m_detectors must be a positive even integer")

    @property
    def dtheta(self) -> float:
        return 2 * np.pi / self.m_detectors

    def axis(self) -> np.ndarray:
        return self.dtheta * np.arange(self.m_detectors)

    def orders(self) -> np.ndarray:
        """Angular orders ``k = -M/2 .. M/2 - 1``."""
        m = self.m_detectors
        return np.arange(-m // 2, m // 2)


@dataclass(frozen=True)
class FrequencyGrid:
    dlambda: float
    l_nyq: int

    def __post_init__(self):
        if not self.dlambda > 0 or self.l_nyq <= 0:
            raise GridError("FrequencyGrid needs dlambda > 0 and l_nyq > 0")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.l_nyq, self.l_nyq + 1)

    def axis(self) -> np.ndarray:
        return self.dlambda * self.indices

    @property
    def nyquist(self) -> float:
        return self.l_nyq * self.dlambda


@dataclass(frozen=True)
class RadonGrid:
    """Projection directions ``alpha_q = 2 pi q / n_alpha`` and offsets ``p0 + r dp``."""

    n_alpha: int
    n_p: int
    p0: float
    dp: float

    def __post_init__(self):
        if self.n_alpha <= 0 or self.n_p <= 0:
            raise GridError("RadonGrid needs positive sizes")
        if not self.dp > 0:
            raise GridError("dp must be positive")

    @classmethod
    def symmetric(cls, n_alpha: int, dp: float, p_max: float = 1.0) -> "RadonGrid":
        """Grid with ``p = -p_max .. p_max`` inclusive, spacing ``dp``."""
        half = int(round(p_max / dp))
        if not np.isclose(half * dp, p_max, rtol=0, atol=1e-9 * dp):
            raise GridError("p_max must be a multiple of dp")
        return cls(n_alpha=n_alpha, n_p=2 * half + 1, p0=-half * dp, dp=dp)

    @property
    def dalpha(self) -> float:
        return 2 * np.pi / self.n_alpha

    def alpha_axis(self) -> np.ndarray:
        return self.dalpha * np.arange(self.n_alpha)

    def p_axis(self) -> np.ndarray:
        return self.p0 + self.dp * np.arange(self.n_p)

    @property
    def p_last(self) -> float:
        return self.p0 + (self.n_p - 1) * self.dp

    def is_p_symmetric(self) -> bool:
        return abs(self.p0 + self.p_last) <= 1e-9 * self.dp


@dataclass(frozen=True)
class ImageGrid:
    """Pixel grid on ``[-1, 1]^2``; pixel centres sit at ``-1 + (i + 1/2) h``."""

    n_x: int
    n_y: int | None = None
    extent: float = 1.0

    def __post_init__(self):
        if self.n_y is None:
            object.__setattr__(self, "n_y", self.n_x)
        if self.n_x <= 0 or self.n_y <= 0:
            raise GridError("image sizes must be positive")

    @property
    def hx(self) -> float:
        return 2 * self.extent / self.n_x

    @property
    def hy(self) -> float:
        return 2 * self.extent / self.n_y

    def x_axis(self) -> np.ndarray:
        return -self.extent + self.hx * (np.arange(self.n_x) + 0.5)

    def y_axis(self) -> np.ndarray:
        return -self.extent + self.hy * (np.arange(self.n_y) + 0.5)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Y)`` of shape ``(n_y, n_x)``; row index increases with y."""
        return np.meshgrid(self.x_axis(), self.y_axis())


@dataclass(frozen=True)
class Sinogram:
    """Boundary pressure samples, shape ``(M, n_extended)`` (detector-major).

    ``zero_tail`` marks samples past ``T`` that were zero-filled rather than
    simulated.
    """

    grid_t: TimeGrid
    grid_theta: AngularGrid
    values: np.ndarray
    delta2: float = float(np.tan(np.deg2rad(10.0)))
    radius: float = 1.0
    zero_tail: bool = False

    def __post_init__(self):
        v = _frozen(self.values)
        shape = (self.grid_theta.m_detectors, self.grid_t.n_extended)
        if v.shape != shape:
            raise GridError(f"sinogram values have shape {v.shape}, expected {shape}")
        if not np.all(np.isfinite(v)):
            raise GridError("sinogram contains non-finite values")
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray, **kw) -> "Sinogram":
        return replace(self, values=values, **kw)


@dataclass(frozen=True)
class RadonData:
    """Samples on ``(alpha, p)``; shape ``(n_alpha, n_p)``."""

    grid: RadonGrid
    values: np.ndarray
    kind: str = "F"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in RADON_KINDS:
            raise GridError(f"unknown RadonData kind {self.kind!r}")
        v = _frozen(self.values)
        if v.shape != (self.grid.n_alpha, self.grid.n_p):
            raise GridError(f"radon values have shape {v.shape}, expected {(self.grid.n_alpha, self.grid.n_p)}")
        if not np.all(np.isfinite(v)):
            raise GridError("radon data contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def is_derivative(self) -> bool:
        return self.kind.startswith("d")

    def with_values(self, values: np.ndarray, kind: str | None = None) -> "RadonData":
        return RadonData(self.grid, values, kind or self.kind, dict(self.meta))


@dataclass(frozen=True)
class Image:
    grid: ImageGrid
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.n_y, self.grid.n_x):
            raise GridError(f"image values have shape {v.shape}, expected {(self.grid.n_y, self.grid.n_x)}")
        if not np.all(np.isfinite(v)):
            raise GridError("image contains non-finite values")
        object.__setattr__(self, "values", v)

    def __sub__(self, other: "Image") -> "Image":
        if other.grid != self.grid:
            raise GridError("image grids differ")
        return Image(self.grid, self.values - other.values)


def window_p(data: RadonData, p_lo: float, p_hi: float) -> RadonData:
    """Restrict ``data`` to samples with ``p_lo <= p <= p_hi``.

    The window must lie inside the stored p range; returned samples are
    copies of the source samples, the alpha grid is untouched.
    """
    g = data.grid
    tol = 1e-9 * g.dp
    if p_lo > p_hi or p_lo < g.p0 - tol or p_hi > g.p_last + tol:
        raise GridError(f"window [{p_lo}, {p_hi}] outside p range [{g.p0}, {g.p_last}]")
    lo = int(np.ceil((p_lo - g.p0) / g.dp - 1e-9))
    hi = int(np.floor((p_hi - g.p0) / g.dp + 1e-9))
    if hi < lo:
        raise GridError("window contains no samples")
    grid = RadonGrid(g.n_alpha, hi - lo + 1, g.p0 + lo * g.dp, g.dp)
    return RadonData(grid, data.values[:, lo : hi + 1], data.kind, dict(data.meta))


def extend_time(s: Sinogram, tail_fraction: float, continuation=None) -> Sinogram:
    """Grow the time axis to cover ``[t0, T + b]`` with ``b = tail_fraction * (T - t0)``.

    ``continuation(t)`` may supply the signal on the new samples (shape
    ``(M, len(t))``); without it the tail is zero-filled and flagged.
    """
    if not tail_fraction > 0:
        raise GridError("tail_fraction must be positive")
    g = s.grid_t
    b = tail_fraction * (g.T - g.t0)
    n_ext = g.n_samples + int(round(b / g.dt))
    if n_ext <= g.n_extended:
        return s
    grid = TimeGrid(g.n_samples, g.dt, g.t0, n_ext, max(g.n_padded, next_pow2(4 * n_ext)))
    vals = np.zeros((s.grid_theta.m_detectors, n_ext))
    vals[:, : g.n_extended] = s.values
    zero_tail = s.zero_tail
    if continuation is not None:
        t_new = grid.axis()[g.n_extended :]
        vals[:, g.n_extended :] = continuation(t_new)
    else:
        zero_tail = True
    return replace(s, grid_t=grid, values=vals, zero_tail=zero_tail)
