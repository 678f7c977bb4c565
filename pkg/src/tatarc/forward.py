"""Boundary data on the unit circle from the 2D Poisson formula.

For unit sound speed and ``u_t(0) = 0``,

    u(t, x) = d/dt V(t, x),   V(t, x) = int_0^t r M_f(x, r) / sqrt(t^2 - r^2) dr,

with ``M_f(x, r)`` the circular mean of the source.  ``V`` is computed per
component by Gauss-Legendre quadrature after the substitution
``r = t sin(psi)`` (removes the Abel singularity) and a squared-sine map in
``psi`` (removes the square-root zeros of the circular mean at first and
last contact).  The time derivative is a centred difference on a grid four
times finer than the output grid; the fine samples are then low-pass
filtered (Hann-windowed sinc, half-width two output steps) and decimated,
so that jump discontinuities of the source do not alias.

Nothing here touches Hankel functions or FFTs, so the simulated data share no
code path with the reconstruction.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .grids import AngularGrid, RadonData, RadonGrid, Sinogram, TimeGrid
from .phantom import Disk, GaussianBump, Phantom

__all__ = [
    "AcquisitionConfig",
    "ForwardSimulationError",
    "simulate_boundary_data",
    "apply_reduction",
    "reduction_mask",
    "add_noise",
    "poisson_potential",
    "antialias_taps",
    "matched_radon_data",
]

DEFAULT_DELTA2 = float(np.tan(np.deg2rad(10.0)))


class ForwardSimulationError(RuntimeError):
    """Quadrature did not converge; ``samples`` lists offending ``(t, theta)`` pairs."""

    def __init__(self, msg, samples=()):
        super().__init__(msg)
        self.samples = list(samples)


@dataclass(frozen=True)
class AcquisitionConfig:
    """Which part of the circle is measured.

    ``zero_arc`` is in degrees; ``None`` means full data.  With
    ``mask_kind="smooth"`` the data are tapered to zero by a raised cosine
    over ``smooth_width_deg`` degrees just outside the zeroed arc.
    """

    delta2: float = DEFAULT_DELTA2
    zero_arc: tuple[float, float] | None = (190.0, 350.0)
    mask_kind: str = "hard"
    smooth_width_deg: float = 5.0

    def __post_init__(self):
        if self.mask_kind not in ("hard", "smooth"):
            raise ValueError(f"mask_kind must be 'hard' or 'smooth', got {self.mask_kind!r}")
        if self.mask_kind == "smooth" and not self.smooth_width_deg > 0:
            raise ValueError("smooth mask needs a positive width")
        if self.zero_arc is not None:
            lo, hi = self.zero_arc
            if not (180.0 <= lo <= hi <= 360.0):
                raise ValueError("zero_arc must lie in the lower half circle [180, 360] degrees")
            object.__setattr__(self, "zero_arc", (float(lo), float(hi)))


def _disk_potential(comp: Disk, d, t, x, w):
    """V(t) for one disk; ``d`` is (n_det, 1), ``t`` is (1, n_t), nodes on the last axis."""
    rho = comp.radius
    r0, r1 = d - rho, d + rho
    active = t > r0
    ts = np.where(active, t, 1.0)
    psi_a = np.arcsin(np.clip(r0 / ts, 0.0, 1.0))
    beyond = ts > r1
    psi_b = np.where(beyond, np.arcsin(np.clip(r1 / ts, 0.0, 1.0)), 0.5 * np.pi)
    span = psi_b - psi_a
    phi = 0.5 * np.pi * (x + 1.0)
    s2 = np.sin(0.5 * phi) ** 2
    c2 = 1.0 - s2
    psi = psi_a[..., None] + span[..., None] * s2
    up = span[..., None] * s2  # psi - psi_a
    down = span[..., None] * c2  # psi_b - psi
    T = ts[..., None]
    r = T * np.sin(psi)
    lo = 2.0 * T * np.cos(0.5 * (psi + psi_a[..., None])) * np.sin(0.5 * up)
    hi_beyond = 2.0 * T * np.cos(0.5 * (psi_b[..., None] + psi)) * np.sin(0.5 * down)
    hi_inside = (r1 - ts)[..., None] + 2.0 * T * np.sin(0.5 * down) ** 2
    hi = np.where(beyond[..., None], hi_beyond, hi_inside)
    q = np.clip(lo * hi / (4.0 * d[..., None] * r), 0.0, 1.0)
    mean = (2.0 / np.pi) * np.arcsin(np.sqrt(q))
    integrand = np.sin(psi) * mean * 0.5 * np.sin(phi) * span[..., None]
    v = ts * (integrand @ w) * (0.5 * np.pi)
    return np.where(active, comp.amplitude * v, 0.0)


def _generic_potential(comp, d, t, x, w):
    """Same integral with the component's own circular mean (used for bumps)."""
    R = comp.support_radius
    r0, r1 = d - R, d + R
    active = t > r0
    ts = np.where(active, t, 1.0)
    psi_a = np.arcsin(np.clip(r0 / ts, 0.0, 1.0))
    psi_b = np.where(ts > r1, np.arcsin(np.clip(r1 / ts, 0.0, 1.0)), 0.5 * np.pi)
    span = psi_b - psi_a
    phi = 0.5 * np.pi * (x + 1.0)
    psi = psi_a[..., None] + span[..., None] * np.sin(0.5 * phi) ** 2
    r = ts[..., None] * np.sin(psi)
    dd = np.broadcast_to(d[..., None], r.shape)
    mean = comp.circular_mean(dd.ravel(), r.ravel()).reshape(r.shape)
    integrand = np.sin(psi) * mean * 0.5 * np.sin(phi) * span[..., None]
    v = ts * (integrand @ w) * (0.5 * np.pi)
    return np.where(active, v, 0.0)


def poisson_potential(ph: Phantom, z: np.ndarray, t: np.ndarray, n_nodes: int = 48) -> np.ndarray:
    """V(t, z) for detector positions ``z`` (n, 2) and times ``t`` (k,); shape (n, k)."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    t = np.asarray(t, dtype=np.float64).reshape(1, -1)
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    out = np.zeros((z.shape[0], t.shape[1]))
    for comp in ph.components:
        d = np.hypot(z[:, 0] - comp.center[0], z[:, 1] - comp.center[1]).reshape(-1, 1)
        if np.any(d <= comp.support_radius):
            raise ForwardSimulationError("detector inside the source support")
        if isinstance(comp, Disk):
            out += _disk_potential(comp, d, t, x, w)
        elif isinstance(comp, GaussianBump):
            out += _generic_potential(comp, d, t, x, w)
        else:
            raise TypeError(f"unsupported component {comp!r}")
    return out


def antialias_taps(refine: int = 4, cutoff: float | None = 0.4, half_width: int = 2) -> np.ndarray:
    """Decimation filter on the fine grid, ``2 * half_width * refine + 1`` taps summing to one.

    ``cutoff`` is the passband edge as a fraction of the output Nyquist
    frequency; ``None`` gives plain point decimation.
    """
    m = np.arange(-half_width * refine, half_width * refine + 1)
    if cutoff is None:
        return (m == 0).astype(np.float64)
    if not 0 < cutoff <= 1:
        raise ValueError("cutoff must be in (0, 1]")
    x = m / refine
    k = np.sinc(cutoff * x) * 0.5 * (1.0 + np.cos(np.pi * x / half_width))
    return k / k.sum()


def simulate_boundary_data(
    ph: Phantom,
    grid_t: TimeGrid,
    grid_theta: AngularGrid,
    *,
    n_nodes: int = 48,
    refine: int = 4,
    cutoff: float | None = 0.4,
    check: bool = True,
    check_tol: float = 1e-6,
    workers: int = 1,
    chunk: int = 32,
) -> Sinogram:
    """Sample ``u(t_i, z(theta_j))`` on all ``n_extended`` time samples.

    ``u`` is formed on a grid ``refine`` times finer than ``dt`` and
    decimated with :func:`antialias_taps`.  With ``check`` set, the potential
    is recomputed with half the nodes and any sample whose difference exceeds
    ``check_tol`` times the peak of ``|V|`` raises
    :class:`ForwardSimulationError`.
    """
    if refine < 4:
        raise ValueError("time refinement must be at least 4")
    taps = antialias_taps(refine, cutoff)
    half = taps.size // 2
    theta = grid_theta.axis()
    z = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    n_t = grid_t.n_extended
    h = grid_t.dt / refine
    n_fine = refine * (n_t - 1) + 2 * half + 1
    # potential on cell edges of the fine grid; u on the fine grid is its difference quotient
    t_edges = grid_t.t0 - half * h + h * (np.arange(n_fine + 1) - 0.5)
    t_pos = np.clip(t_edges, 0.0, None)
    live = t_edges[None, :] > 0
    idx = refine * np.arange(n_t)[:, None] + np.arange(taps.size)[None, :]
    out = np.zeros((z.shape[0], n_t))
    bad: list[tuple[float, float]] = []

    def work(lo):
        hi = min(lo + chunk, z.shape[0])
        v = np.where(live, poisson_potential(ph, z[lo:hi], t_pos, n_nodes), 0.0)
        u_fine = np.diff(v, axis=1) / h
        u = u_fine[:, idx] @ taps
        flagged = []
        if check:
            v_half = np.where(live, poisson_potential(ph, z[lo:hi], t_pos, max(4, n_nodes // 2)), 0.0)
            scale = max(np.abs(v).max(), 1e-300)
            err = np.abs(v - v_half) / scale
            rows, cols = np.nonzero(err > check_tol)
            flagged = [(float(t_edges[c]), float(theta[lo + r])) for r, c in zip(rows, cols)]
        return lo, hi, u, flagged

    starts = range(0, z.shape[0], chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(work, starts))
    else:
        results = [work(s) for s in starts]
    for lo, hi, u, flagged in results:
        out[lo:hi] = u
        bad.extend(flagged)
    if bad:
        raise ForwardSimulationError(
            f"Poisson quadrature did not converge at {len(bad)} samples, first (t, theta) = {bad[0]}", bad
        )
    return Sinogram(grid_t, grid_theta, out)


def matched_radon_data(
    ph: Phantom,
    grid: RadonGrid,
    dt: float,
    *,
    derivative: bool = False,
    refine: int = 4,
    cutoff: float | None = 0.4,
    n_sub: int = 4,
) -> RadonData:
    """Exact projections passed through the simulator's time filter, applied in ``p``.

    The reconstruction maps time shifts of the data to shifts in ``p``, so
    data made by :func:`simulate_boundary_data` should reproduce these
    values rather than the raw projections (whose p-derivative is not even
    square integrable for disks).
    """
    taps = antialias_taps(refine, cutoff)
    half = taps.size // 2
    h = dt / refine
    alpha = grid.alpha_axis()
    omega = np.stack([np.cos(alpha), np.sin(alpha)], axis=-1)[:, None, :]
    p = grid.p_axis()[None, :]
    out = np.zeros((grid.n_alpha, grid.n_p))
    x, w = np.polynomial.legendre.leggauss(n_sub)
    for j, k in enumerate(taps):
        if k == 0.0:
            continue
        c = p + (j - half) * h
        if derivative:
            # cell average of dF/dp over one fine step
            out += k * (ph.exact_radon(omega, c + 0.5 * h) - ph.exact_radon(omega, c - 0.5 * h)) / h
        else:
            out += k * 0.5 * sum(wi * ph.exact_radon(omega, c + 0.5 * h * xi) for xi, wi in zip(x, w))
    return RadonData(grid, out, "dF/dp" if derivative else "F")


def reduction_mask(grid_theta: AngularGrid, cfg: AcquisitionConfig) -> np.ndarray:
    """Per-detector weight psi(theta) in [0, 1]."""
    m = np.ones(grid_theta.m_detectors)
    if cfg.zero_arc is None:
        return m
    deg = np.rad2deg(grid_theta.axis())
    lo, hi = cfg.zero_arc
    inside = (deg >= lo) & (deg <= hi)
    m[inside] = 0.0
    if cfg.mask_kind == "smooth":
        wdt = cfg.smooth_width_deg
        # taper on the measured side of each end of the zeroed arc
        for edge, direction in ((lo, -1.0), (hi, 1.0)):
            dist = direction * (deg - edge)
            dist = np.mod(dist + 180.0, 360.0) - 180.0
            band = (dist > 0) & (dist < wdt) & ~inside
            m[band] = 0.5 * (1.0 - np.cos(np.pi * dist[band] / wdt))
    return m


def apply_reduction(s: Sinogram, cfg: AcquisitionConfig) -> Sinogram:
    """Zero (or taper) the detectors on the unmeasured arc."""
    mask = reduction_mask(s.grid_theta, cfg)
    return s.with_values(s.values * mask[:, None], delta2=cfg.delta2)


def add_noise(s: Sinogram, level: float, seed: int | None = 0) -> Sinogram:
    """Additive white Gaussian noise with relative L2 norm ``level``."""
    if level <= 0:
        return s
    rng = np.random.default_rng(seed)
    rms = np.sqrt(np.mean(s.values**2))
    return s.with_values(s.values + level * rms * rng.standard_normal(s.values.shape))
