"""Fast recovery of p-derivatives of Radon projections from circular-boundary data.

Pipeline for data ``h(t, theta)`` on the unit circle (unit sound speed):

1. ``prepare_h``   -- causal extension, smooth cut-off on ``[T, T + b]`` and a
   zero-mean correction so the space-time integral of ``h`` vanishes;
2. ``compute_bk``  -- Fourier coefficients ``b_k(lambda_l)`` by a 2D FFT;
3. ``compute_akl`` -- ``a_{k,l} = 2i (-i)^|k| b_k(lambda_l) dlambda / H1_|k|(lambda_l)``;
4. ``synthesize_dF`` -- a second 2D FFT gives ``2 d/dp R[w(2, .)](omega, p + 2)``
   on ``p in [-1, 1]``, which approximates ``dF/dp``;
5. ``symmetrize``  -- fill ``alpha in (pi, 2 pi)`` from ``dF/dp(omega, p) = -dF/dp(-omega, -p)``;
6. ``antidifferentiate`` (optional) -- integrate in ``p`` with the endpoint
   values balanced in the least-squares sense.

The radiating modes ``H1_|k|(lambda r) e^{ik theta} e^{-i lambda t} / H1_|k|(lambda)``
have line integrals ``2 (-i)^|k| e^{i lambda p} e^{ik alpha} / (lambda H1_|k|(lambda))``
for lines at distance ``p > 0`` from the origin, which is what makes step 4 a
plain 2D DFT.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .forward import AcquisitionConfig, apply_reduction
from .grids import (
    AngularGrid,
    FrequencyGrid,
    GridError,
    RadonData,
    RadonGrid,
    Sinogram,
    is_pow2,
)
from .specfun import OK, bessel_jy, safe_reciprocal

__all__ = [
    "SpectralCoefficients",
    "ReconstructionError",
    "prepare_h",
    "zero_mean_bump",
    "cutoff_window",
    "compute_bk",
    "hankel_tables",
    "compute_akl",
    "synthesize_dF",
    "closed_form_Ik",
    "symmetrize",
    "antidifferentiate",
    "run_pipeline",
    "MODES",
]

MODES = ("full", "reduced", "naive")


class ReconstructionError(RuntimeError):
    """Pipeline misconfiguration; the message names the failing stage."""


@dataclass(frozen=True)
class SpectralCoefficients:
    """Half spectrum of ``b`` (and ``a``): rows are ``k`` in FFT order, columns ``l = 0 .. l_nyq``.

    The data are real, so ``b_k(-lambda) = conj(b_{-k}(lambda))`` and the same
    holds for ``a``; :meth:`full_b` and :meth:`full_a` expand to
    ``k = -M/2 .. M/2-1`` by ``l = -l_nyq .. l_nyq``.
    """

    b: np.ndarray
    grid_theta: AngularGrid
    fgrid: FrequencyGrid
    a: np.ndarray | None = None

    @property
    def orders(self) -> np.ndarray:
        """Row orders, FFT layout."""
        m = self.grid_theta.m_detectors
        return np.fft.fftfreq(m, 1.0 / m).astype(np.int64)

    @property
    def freqs(self) -> np.ndarray:
        return self.fgrid.axis()

    def _full(self, half):
        m = self.grid_theta.m_detectors
        L = self.fgrid.l_nyq
        nat = np.arange(-m // 2, m // 2)
        pos = half[nat % m]  # rows k ascending, l = 0 .. L
        neg = np.conj(half[(-nat) % m])[:, :0:-1]  # l = -L .. -1 from conj(X_{-k}(lambda))
        return np.concatenate([neg, pos], axis=1) if L else pos

    def full_b(self) -> np.ndarray:
        return self._full(self.b)

    def full_a(self) -> np.ndarray:
        if self.a is None:
            raise ReconstructionError("a_{k,l} not computed")
        return self._full(self.a)


# keep FFT/elementwise temporaries small (a few MB) so large runs are not
# dominated by page faults on fresh allocations
_BLOCK_BYTES = 1 << 22


def _blocks(n: int, row_bytes: int):
    step = max(1, _BLOCK_BYTES // max(row_bytes, 1))
    return [slice(lo, min(lo + step, n)) for lo in range(0, n, step)]


def cutoff_window(t: np.ndarray, T: float, b: float) -> np.ndarray:
    """Raised cosine: 1 for t <= T, 0 for t >= T + b, C^1 in between."""
    u = np.clip((t - T) / b, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * u))


def zero_mean_bump(t: np.ndarray, T: float, b: float) -> np.ndarray:
    """``(1 - u^2)^4`` with ``u`` mapping ``(T, T + b)`` onto ``(-1, 1)``."""
    u = (t - (T + 0.5 * b)) / (0.5 * b)
    return np.where(np.abs(u) < 1.0, (1.0 - u * u) ** 4, 0.0)


def prepare_h(s: Sinogram, T: float | None = None, b: float | None = None) -> Sinogram:
    """Cut the data off smoothly on ``[T, T + b]`` and remove its space-time mean.

    The correction is a fixed bump inside ``(T, T + b)``, the same on every
    detector, scaled so that the trapezoid integral over ``t`` and ``theta``
    is zero.  Samples beyond ``T + b`` are set to zero.
    """
    g = s.grid_t
    T = g.T if T is None else float(T)
    if b is None:
        b = g.t_end - T
    if not b > 4 * g.dt:
        raise ReconstructionError(f"prepare_h: cut-off length b={b} must exceed 4*dt={4 * g.dt}")
    if g.t_end + 1e-12 * g.dt < T + b - g.dt:
        raise ReconstructionError("prepare_h: sinogram does not cover [0, T + b]")
    t = g.axis()
    win = cutoff_window(t, T, b)
    h = s.values * win[None, :]
    phi = zero_mean_bump(t, T, b)
    total = h.sum()
    c = -total / (s.grid_theta.m_detectors * phi.sum())
    h = h + c * phi[None, :]
    return s.with_values(h)


def compute_bk(h: Sinogram, fgrid: FrequencyGrid | None = None) -> SpectralCoefficients:
    """Trapezoid/FFT discretisation of

        b_k(lambda) = (2 pi)^-2 int_0^{2pi} int h(t, theta) e^{i lambda t} e^{-ik theta} dt dtheta

    for ``lambda_l >= 0``; ``h`` is real, so ``e^{+i lambda t}`` is the
    conjugate of a real FFT.
    """
    g = h.grid_t
    fg = g.frequency_grid() if fgrid is None else fgrid
    n = g.n_padded
    if fg.l_nyq != n // 2 or not np.isclose(fg.dlambda * n * g.dt, 2 * np.pi):
        raise ReconstructionError("compute_bk: frequency grid does not match the padded time grid")
    m = h.grid_theta.m_detectors
    n_l = fg.l_nyq + 1
    spec = np.empty((m, n_l), dtype=np.complex128)
    shift = np.exp(1j * fg.dlambda * np.arange(n_l) * g.t0) if g.t0 != 0.0 else None
    for rows in _blocks(m, 16 * n):
        blk = np.conj(np.fft.rfft(h.values[rows], n=n, axis=1))
        if shift is not None:
            blk *= shift[None, :]
        spec[rows] = blk
    scale = g.dt * h.grid_theta.dtheta / (2 * np.pi) ** 2
    for cols in _blocks(n_l, 16 * m):
        spec[:, cols] = np.fft.fft(spec[:, cols], axis=0) * scale
    return SpectralCoefficients(b=spec, grid_theta=h.grid_theta, fgrid=fg)


def hankel_tables(fgrid: FrequencyGrid, k_max: int, workers: int = 1, chunk: int = 256):
    """Bessel tables at ``lambda_l``, ``l = 1 .. l_nyq``; built once and shared by both signs."""
    lam = fgrid.dlambda * np.arange(1, fgrid.l_nyq + 1)
    starts = list(range(0, lam.size, chunk))

    def one(lo):
        return bessel_jy(k_max, lam[lo : lo + chunk])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(one, starts))
    else:
        parts = [one(lo) for lo in starts]
    j = np.concatenate([p.j for p in parts])
    y = np.concatenate([p.y for p in parts])
    flags = np.concatenate([p.flags for p in parts])
    return lam, j, y, flags


def compute_akl(coefs: SpectralCoefficients, tables=None, workers: int = 1) -> SpectralCoefficients:
    """Fill ``a``; the lambda-quadrature weight ``dlambda`` is folded in.

    Only ``lambda_l > 0`` is stored; the negative half follows from
    ``H1_n(-s) = (-1)^(n-1) conj(H1_n(s))``, which makes ``a`` inherit the
    conjugate symmetry of ``b``.  ``a_{k,0} = 0`` and evanescent entries
    (Y overflow) are exactly 0.
    """
    fg = coefs.fgrid
    kabs = np.abs(coefs.orders)
    if tables is None:
        tables = hankel_tables(fg, int(kabs.max()), workers=workers)
    _, j, y, flags = tables
    ok = flags == OK
    inv_pos = safe_reciprocal(j + 1j * np.where(ok, y, 0.0), flags)  # (l_nyq, k_max + 1)
    phase = 2j * (-1j) ** (np.arange(inv_pos.shape[1]) % 4) * fg.dlambda
    weights = (inv_pos * phase[None, :]).T  # (k_max + 1, l_nyq)
    a = np.empty_like(coefs.b)
    a[:, 0] = 0.0
    for rows in _blocks(a.shape[0], 16 * a.shape[1]):
        np.multiply(coefs.b[rows, 1:], weights[kabs[rows]], out=a[rows, 1:])
    return replace(coefs, a=a)


def _check_p_grid(fg: FrequencyGrid, rgrid: RadonGrid, n_fft: int):
    if not np.isclose(rgrid.dp * fg.dlambda * n_fft, 2 * np.pi, rtol=1e-9, atol=0):
        raise ReconstructionError(
            f"synthesize_dF: p spacing {rgrid.dp} incompatible with dlambda={fg.dlambda} and N_FFT={n_fft}"
        )
    if rgrid.n_p > n_fft:
        raise ReconstructionError("synthesize_dF: p window longer than the FFT period")


def synthesize_dF(
    coefs: SpectralCoefficients, rgrid: RadonGrid | None = None, workers: int = 1, kind: str = "dFtilde/dp"
) -> RadonData:
    """Evaluate ``2 * sum_k sum_l a_{k,l} e^{i lambda_l p} e^{ik alpha}`` by a 2D inverse FFT.

    ``rgrid`` defaults to ``n_alpha = M`` directions and ``p = -1 .. 1`` with
    ``dp = 2 pi / (n_padded dlambda)``.  The +/- Nyquist terms get half
    weight each.  By the conjugate symmetry of ``a`` the sum is real, so the
    ``lambda`` transform is a real inverse FFT.
    """
    if coefs.a is None:
        raise ReconstructionError("synthesize_dF: a_{k,l} not computed")
    fg = coefs.fgrid
    n_fft = 2 * fg.l_nyq
    m = coefs.grid_theta.m_detectors
    if rgrid is None:
        dp = 2 * np.pi / (n_fft * fg.dlambda)
        rgrid = RadonGrid.symmetric(m, dp, 1.0)
    if rgrid.n_alpha != m:
        raise ReconstructionError("synthesize_dF: n_alpha must equal the detector count")
    _check_p_grid(fg, rgrid, n_fft)
    n_l = fg.l_nyq + 1
    # shift the p origin to the window start; the m factor undoes ifft's 1/m
    shift = m * np.exp(1j * fg.dlambda * np.arange(n_l) * rgrid.p0)
    g = np.empty_like(coefs.a)
    for cols in _blocks(n_l, 16 * m):
        g[:, cols] = np.fft.ifft(coefs.a[:, cols], axis=0) * shift[None, cols]
    # irfft: (1/N)(X_0 + 2 Re sum X_l e^{..} + Re X_N/2 (-1)^j), i.e. the two-sided sum with halved Nyquist
    out = np.empty((m, rgrid.n_p))
    for rows in _blocks(m, 8 * n_fft):
        out[rows] = np.fft.irfft(g[rows], n=n_fft, axis=1)[:, : rgrid.n_p] * (2.0 * n_fft)
    return RadonData(rgrid, out, kind)


def closed_form_Ik(k: int, alpha: float, p: float, lam: float) -> complex:
    """Line integral of ``H1_|k|(lam r) e^{ik theta} / H1_|k|(lam)`` over ``x . omega(alpha) = p``.

    Valid for ``p > 0`` (and as the limit ``p -> 0+``).
    """
    if lam == 0:
        raise ValueError("closed_form_Ik needs lam != 0")
    n = abs(int(k))
    tb = bessel_jy(n, abs(lam))
    h = complex(tb.j[0, n], tb.y[0, n])
    if lam < 0:
        h = (1.0 if (n - 1) % 2 == 0 else -1.0) * h.conjugate()
    return 2 * (-1j) ** n / (lam * h) * np.exp(1j * lam * p) * np.exp(1j * k * alpha)


def symmetrize(d: RadonData) -> RadonData:
    """Keep ``alpha in [0, pi)``; set ``value(alpha, p) = -value(alpha - pi, -p)`` from ``pi`` on.

    For a non-derivative kind (``Ftilde``/``F``) the copied values keep
    their sign.
    """
    g = d.grid
    if not g.is_p_symmetric():
        raise ReconstructionError("symmetrize: p grid must be symmetric about 0")
    if g.n_alpha % 2:
        raise ReconstructionError("symmetrize: n_alpha must be even")
    half = g.n_alpha // 2
    v = np.array(d.values, copy=True)
    sign = -1.0 if d.is_derivative else 1.0
    v[half:] = sign * d.values[:half, ::-1]
    kind = "dG/dp" if d.is_derivative else "G"
    return d.with_values(v, kind)


def antidifferentiate(d: RadonData) -> RadonData:
    """Cumulative trapezoid from ``p = -1`` minus the constant ``(A(-1) + A(1)) / 2``."""
    g = d.grid
    v = d.values
    acc = np.zeros_like(v)
    acc[:, 1:] = np.cumsum(0.5 * (v[:, 1:] + v[:, :-1]) * g.dp, axis=1)
    acc -= 0.5 * (acc[:, :1] + acc[:, -1:])
    kind = {"dF/dp": "F", "dFtilde/dp": "Ftilde", "dG/dp": "G"}.get(d.kind, "F")
    return d.with_values(acc, kind)


def run_pipeline(
    s: Sinogram,
    cfg: AcquisitionConfig | None = None,
    mode: str = "reduced",
    *,
    b: float | None = None,
    workers: int = 1,
    tables=None,
) -> RadonData:
    """Boundary data -> ``dF/dp`` estimate on ``S^1 x [-1, 1]``.

    ``full`` uses the data as given; ``reduced`` masks them per ``cfg`` and
    completes the invisible half by symmetry; ``naive`` masks but skips the
    completion.
    """
    if mode not in MODES:
        raise ReconstructionError(f"unknown mode {mode!r}; expected one of {MODES}")
    if not is_pow2(s.grid_theta.m_detectors):
        raise ReconstructionError("run_pipeline: detector count must be a power of two")
    cfg = AcquisitionConfig() if cfg is None else cfg
    if mode != "full":
        s = apply_reduction(s, cfg)
    try:
        h = prepare_h(s, b=b)
        coefs = compute_akl(compute_bk(h), tables=tables, workers=workers)
        dF = synthesize_dF(coefs, workers=workers)
    except GridError as e:
        raise ReconstructionError(f"run_pipeline: {e}") from e
    if mode == "reduced":
        out = symmetrize(dF)
    elif mode == "full":
        out = dF.with_values(dF.values, "dF/dp")
    else:
        out = dF
    out.meta.update(dF.meta, mode=mode)
    return out
