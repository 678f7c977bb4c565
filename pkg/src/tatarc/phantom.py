"""Analytic sources: disks and truncated Gaussian bumps.

Each component knows its own line integrals and circular means in closed
form (or by cheap quadrature), which makes a phantom usable both as ground
truth and as input to the forward simulator.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, special

from .grids import Image, ImageGrid, RadonData, RadonGrid

__all__ = [
    "Disk",
    "GaussianBump",
    "Phantom",
    "PhantomError",
    "default_phantom",
    "DEFAULT_PHANTOM_VERSION",
    "exact_radon_data",
]

DEFAULT_PHANTOM_VERSION = 1
BUMP_TRUNCATION = 4.0


class PhantomError(ValueError):
    pass


def _chord_factor(d, r, r0, r1):
    """sqrt((r - r0)(r1 - r) / (4 d r)), the sine of half the arc angle inside a disk."""
    with np.errstate(invalid="ignore", divide="ignore"):
        q = (r - r0) * (r1 - r) / (4.0 * d * r)
    return np.sqrt(np.clip(q, 0.0, 1.0))


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise PhantomError("disk radius must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def support_radius(self) -> float:
        return self.radius

    def eval(self, x, y):
        cx, cy = self.center
        inside = (x - cx) ** 2 + (y - cy) ** 2 < self.radius**2
        return np.where(inside, self.amplitude, 0.0)

    def radon(self, s):
        """Line integral at signed distance ``s`` from the centre."""
        rho2 = self.radius**2
        return self.amplitude * 2.0 * np.sqrt(np.clip(rho2 - s * s, 0.0, None))

    def radon_dp(self, s):
        rho2 = self.radius**2
        inside = s * s < rho2
        with np.errstate(divide="ignore", invalid="ignore"):
            v = -2.0 * self.amplitude * s / np.sqrt(rho2 - s * s)
        return np.where(inside, v, 0.0)

    @property
    def mass(self) -> float:
        return self.amplitude * np.pi * self.radius**2

    def circular_mean(self, d, r):
        """Mean over the circle of radius ``r`` whose centre is ``d`` from the disk centre."""
        d = np.asarray(d, dtype=np.float64)
        r = np.asarray(r, dtype=np.float64)
        rho = self.radius
        full = d + r <= rho
        r0 = np.abs(d - rho)
        partial = (r > r0) & (r < d + rho) & ~full
        frac = (2.0 / np.pi) * np.arcsin(_chord_factor(d, r, d - rho, d + rho))
        out = np.where(full, 1.0, np.where(partial, frac, 0.0))
        # a degenerate circle samples the point itself
        out = np.where(r == 0, (d < rho).astype(float), out)
        return self.amplitude * out


@dataclass(frozen=True)
class GaussianBump:
    """Gaussian lowered by its value at ``4 sigma`` and cut there.

    ``a (exp(-r^2 / (2 sigma^2)) - exp(-8))`` for ``r < 4 sigma``; continuous,
    so its projections have bounded p-derivatives.
    """

    center: tuple[float, float]
    sigma: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise PhantomError("bump width must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    @property
    def support_radius(self) -> float:
        return BUMP_TRUNCATION * self.sigma

    @property
    def floor(self) -> float:
        return float(np.exp(-0.5 * BUMP_TRUNCATION**2))

    def eval(self, x, y):
        cx, cy = self.center
        r2 = (x - cx) ** 2 + (y - cy) ** 2
        v = self.amplitude * (np.exp(-r2 / (2 * self.sigma**2)) - self.floor)
        return np.where(r2 < self.support_radius**2, v, 0.0)

    def _gauss_part(self, s):
        sig, R = self.sigma, self.support_radius
        half = np.sqrt(np.clip(R * R - s * s, 0.0, None))
        g = np.exp(-s * s / (2 * sig**2)) * sig * np.sqrt(2 * np.pi) * special.erf(half / (sig * np.sqrt(2)))
        return g, half

    def radon(self, s):
        g, half = self._gauss_part(s)
        v = self.amplitude * (g - 2.0 * self.floor * half)
        return np.where(np.abs(s) < self.support_radius, v, 0.0)

    def radon_dp(self, s):
        # the floor term cancels the erf edge term exactly
        g, _ = self._gauss_part(s)
        v = -self.amplitude * s / self.sigma**2 * g
        return np.where(np.abs(s) < self.support_radius, v, 0.0)

    @property
    def mass(self) -> float:
        t = BUMP_TRUNCATION
        return self.amplitude * 2 * np.pi * self.sigma**2 * (1 - (1 + 0.5 * t * t) * np.exp(-0.5 * t * t))

    def circular_mean(self, d, r, n_nodes: int = 48):
        """Gauss-Legendre over the part of the circle inside the truncation radius."""
        d = np.asarray(d, dtype=np.float64)
        r = np.asarray(r, dtype=np.float64)
        d, r = np.broadcast_arrays(d, r)
        R, sig = self.support_radius, self.sigma
        full = d + r <= R
        r0 = np.abs(d - R)
        partial = (r > r0) & (r < d + R)
        half_angle = np.where(full, np.pi, 2.0 * np.arcsin(_chord_factor(d, r, d - R, d + R)))
        half_angle = np.where(full | partial, half_angle, 0.0)
        x, w = np.polynomial.legendre.leggauss(n_nodes)
        phi = 0.5 * (x + 1.0)[None, :] * half_angle.reshape(-1, 1)
        dd = d.reshape(-1, 1)
        rr = r.reshape(-1, 1)
        dist2 = (dd - rr) ** 2 + 2 * dd * rr * (1 - np.cos(phi))
        vals = (np.exp(-dist2 / (2 * sig**2)) - self.floor) @ w
        out = self.amplitude * vals * half_angle.reshape(-1) / (2 * np.pi)
        out = out.reshape(d.shape)
        centre = self.amplitude * (np.exp(-d * d / (2 * sig**2)) - self.floor) * (d < R)
        return np.where(r == 0, centre, out)


@dataclass(frozen=True)
class Phantom:
    """Sum of disk and bump components, supported in the upper half of the unit disk."""

    components: tuple = field(default_factory=tuple)
    check_support: bool = True

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if self.check_support:
            for c in self.components:
                cx, cy = c.center
                rad = c.support_radius
                if np.hypot(cx, cy) + rad >= 1.0 or cy - rad <= 0.0:
                    raise PhantomError(f"{c} is not supported in the open upper half disk")

    def __len__(self):
        return len(self.components)

    def scaled(self, factor: float) -> "Phantom":
        comps = tuple(replace(c, amplitude=c.amplitude * factor) for c in self.components)
        return Phantom(comps, self.check_support)

    def eval(self, x, y=None):
        """f at points; ``x`` may be an ``(..., 2)`` array when ``y`` is omitted."""
        if y is None:
            pts = np.asarray(x, dtype=np.float64)
            x, y = pts[..., 0], pts[..., 1]
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros(np.broadcast(x, y).shape)
        for c in self.components:
            out = out + c.eval(x, y)
        return out if out.ndim else float(out)

    def _offsets(self, omega, p):
        omega = np.asarray(omega, dtype=np.float64)
        if omega.shape[-1] != 2:
            raise ValueError("omega must have a trailing dimension of 2")
        if np.any(np.abs(np.hypot(omega[..., 0], omega[..., 1]) - 1.0) > 1e-12):
            raise ValueError("omega must be a unit vector")
        return omega[..., 0], omega[..., 1], np.asarray(p, dtype=np.float64)

    def exact_radon(self, omega, p):
        """Line integral over ``{x : x . omega = p}``; broadcasts over omega and p."""
        ox, oy, p = self._offsets(omega, p)
        out = np.zeros(np.broadcast(ox, p).shape)
        for c in self.components:
            out = out + c.radon(p - (c.center[0] * ox + c.center[1] * oy))
        return out if out.ndim else float(out)

    def exact_radon_dp(self, omega, p):
        ox, oy, p = self._offsets(omega, p)
        out = np.zeros(np.broadcast(ox, p).shape)
        for c in self.components:
            out = out + c.radon_dp(p - (c.center[0] * ox + c.center[1] * oy))
        return out if out.ndim else float(out)

    def circular_mean(self, x, r, quad: bool = False):
        """Mean of f over the circle ``|y - x| = r``.

        Disks use the arc-length formula; bumps use fixed Gauss-Legendre, or
        adaptive ``scipy.integrate.quad`` (abs tol 1e-10) when ``quad`` is set.
        """
        if r < 0:
            raise ValueError("radius must be non-negative")
        x = np.asarray(x, dtype=np.float64)
        total = 0.0
        for c in self.components:
            d = float(np.hypot(x[0] - c.center[0], x[1] - c.center[1]))
            if isinstance(c, GaussianBump) and quad and r > 0:
                f = lambda phi, c=c: c.eval(x[0] + r * np.cos(phi), x[1] + r * np.sin(phi))
                brk = _bump_breakpoints(c, x, r)
                val = integrate.quad(f, 0.0, 2 * np.pi, points=brk or None, epsabs=1e-10, epsrel=1e-12, limit=200)[0]
                total += val / (2 * np.pi)
            else:
                total += float(c.circular_mean(d, r))
        return total

    @property
    def mass(self) -> float:
        return float(sum(c.mass for c in self.components))

    def render(self, grid: ImageGrid, supersample: int = 1) -> Image:
        """Pixel image; ``supersample > 1`` averages an s x s sub-grid per pixel."""
        s = int(supersample)
        X, Y = grid.mesh()
        acc = np.zeros_like(X)
        offs = (np.arange(s) + 0.5) / s - 0.5
        for ox in offs:
            for oy in offs:
                acc += self.eval(X + ox * grid.hx, Y + oy * grid.hy)
        return Image(grid, acc / (s * s))


def _bump_breakpoints(c, x, r):
    dx, dy = x[0] - c.center[0], x[1] - c.center[1]
    d = np.hypot(dx, dy)
    R = c.support_radius
    if d == 0 or not (abs(d - R) < r < d + R):
        return []
    base = np.arctan2(-dy, -dx)
    half = np.arccos(np.clip((d * d + r * r - R * R) / (2 * d * r), -1, 1))
    return sorted(float(np.mod(base + s * half, 2 * np.pi)) for s in (-1, 1))


def default_phantom() -> Phantom:
    """Three disks in the upper half disk (version ``DEFAULT_PHANTOM_VERSION``)."""
    return Phantom(
        (
            Disk((0.0, 0.5), 0.2, 1.0),
            Disk((-0.45, 0.3), 0.15, 0.6),
            Disk((0.42, 0.28), 0.12, 1.4),
        )
    )


def exact_radon_data(ph: Phantom, grid: RadonGrid, derivative: bool = False) -> RadonData:
    alpha = grid.alpha_axis()
    omega = np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)[:, None, :]
    p = grid.p_axis()[None, :]
    if derivative:
        return RadonData(grid, ph.exact_radon_dp(omega, p), "dF/dp")
    return RadonData(grid, ph.exact_radon(omega, p), "F")
