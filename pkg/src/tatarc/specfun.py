"""Integer-order Bessel J_k, Y_k and Hankel H1_k tables for real positive arguments.

J is obtained by Miller's downward recurrence normalised with the sum rule
``J_0 + 2 * sum(J_2m) = 1``.  Y_0 and Y_1 come from Neumann series in the
J values for small arguments and from the Hankel asymptotic expansion
(modulus/phase form) for large ones; higher orders follow by upward
recurrence, which is stable for Y.  Entries whose Y would leave the finite
range are flagged instead of stored as infinities.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ASYMPTOTIC_SWITCH",
    "OK",
    "Y_OVERFLOW",
    "HankelTable",
    "bessel_jy",
    "hankel1_neg",
    "safe_reciprocal",
    "j_miller",
    "y01_series",
    "y01_asymptotic",
]

ASYMPTOTIC_SWITCH = 12.0
OK = 0
Y_OVERFLOW = 1

# |Y| above this is treated as overflow; J is then subnormal or zero.
_Y_LIMIT = 1e300
_EULER_GAMMA = 0.57721566490153286060651209
# rescaling step for the downward recurrence, 2**600
_RESCALE_EXP = 600
_RESCALE_TRIGGER = 2.0 ** 600


@dataclass(frozen=True)
class HankelTable:
    """Bessel values for orders ``0..k_max`` at one or more arguments.

    ``j`` and ``y`` have shape ``(n_lambda, k_max + 1)``; ``flags`` holds
    ``OK`` or ``Y_OVERFLOW`` per entry.  Overflowed ``y`` entries are stored
    as ``inf`` with the matching sign and must not be used directly.
    """

    lam: np.ndarray
    j: np.ndarray
    y: np.ndarray
    flags: np.ndarray

    @property
    def k_max(self) -> int:
        return self.j.shape[1] - 1

    @property
    def ok(self) -> np.ndarray:
        return self.flags == OK

    def hankel1(self) -> np.ndarray:
        """H1_k(lam) = J_k + i Y_k; overflowed entries come back as nan."""
        h = self.j + 1j * np.where(self.ok, self.y, 0.0)
        return np.where(self.ok, h, np.nan + 0j)

    def reciprocal(self) -> np.ndarray:
        """1 / H1_k(lam) with exact zeros in the overflow region."""
        return safe_reciprocal(self.j + 1j * np.where(self.ok, self.y, 0.0), self.flags)

    def wronskian_defect(self) -> np.ndarray:
        """Relative defect of J_{k+1} Y_k - J_k Y_{k+1} = 2 / (pi lam).

        Shape ``(n_lambda, k_max)``; nan where either order is flagged.
        """
        j, y = self.j, np.where(self.ok, self.y, 0.0)
        w = j[:, 1:] * y[:, :-1] - j[:, :-1] * y[:, 1:]
        target = 2.0 / (np.pi * self.lam)[:, None]
        both = self.ok[:, 1:] & self.ok[:, :-1]
        with np.errstate(invalid="ignore"):
            d = np.abs(w / target - 1.0)
        return np.where(both, d, np.nan)


def _start_order(k_max: int, x_max: float) -> int:
    n = max(k_max, int(np.ceil(x_max))) + 30 + int(np.sqrt(60.0 * max(k_max, x_max, 1.0)))
    return n + (n % 2)


def j_miller(k_max: int, x: np.ndarray) -> np.ndarray:
    """J_0..J_{k_max}(x) for each x > 0 by downward recurrence.

    Returns an array of shape ``(len(x), k_max + 1)``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    n_top = _start_order(k_max, float(x.max()))
    # order-major storage keeps every recurrence step a contiguous write
    raw = np.zeros((n_top + 1, x.size))
    scale = np.zeros((n_top + 1, x.size), dtype=np.int32)
    cur_scale = np.zeros(x.size, dtype=np.int32)
    jp = np.zeros(x.size)  # J_{k+1}
    jc = np.full(x.size, 1e-300)  # J_k, arbitrary seed at k = n_top
    raw[n_top] = jc
    two_over_x = 2.0 / x
    for k in range(n_top, 0, -1):
        jm = k * two_over_x * jc - jp
        jp, jc = jc, jm
        big = np.abs(jc) > _RESCALE_TRIGGER
        if big.any():
            jc = np.where(big, np.ldexp(jc, -_RESCALE_EXP), jc)
            jp = np.where(big, np.ldexp(jp, -_RESCALE_EXP), jp)
            cur_scale = cur_scale + big
        raw[k - 1] = jc
        scale[k - 1] = cur_scale
    # bring every stored value to the scale of J_0; lagging ones underflow to 0
    shift = (scale - scale[:1]) * _RESCALE_EXP
    vals = np.ldexp(raw, shift.clip(-4000, 0))
    norm = vals[0] + 2.0 * vals[2::2].sum(axis=0)
    out = vals[: k_max + 1] / norm[None, :]
    return out.T


def y01_series(x: np.ndarray, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Y_0, Y_1 from Neumann series over the Miller J values.

    ``j`` must hold enough orders for the series to converge (the table built
    by :func:`j_miller` with ``k_max`` well above ``x`` does).
    """
    x = np.asarray(x, dtype=np.float64)
    n = j.shape[1]
    log_term = np.log(x / 2.0) + _EULER_GAMMA
    m = np.arange(1, (n - 1) // 2 + 1)
    sgn = np.where(m % 2 == 0, 1.0, -1.0)
    s0 = (sgn / m * j[:, 2 * m]).sum(axis=1)
    y0 = (2.0 / np.pi) * (log_term * j[:, 0] - 2.0 * s0)
    m1 = m[2 * m + 1 < n]
    s1 = (sgn[: m1.size] / m1 * (j[:, 2 * m1 - 1] - j[:, 2 * m1 + 1])).sum(axis=1)
    y1 = -(2.0 / np.pi) * (j[:, 0] / x - log_term * j[:, 1] - s1)
    return y0, y1


def y01_asymptotic(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Y_0, Y_1 from the Hankel expansion, truncated at the smallest term."""
    x = np.asarray(x, dtype=np.float64)
    out = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        p = np.ones_like(x)
        q = np.zeros_like(x)
        term = np.ones_like(x)
        live = np.ones(x.shape, dtype=bool)
        for m in range(1, 80):
            nxt = term * (mu - (2 * m - 1) ** 2) / (8.0 * m * x)
            live &= np.abs(nxt) < np.abs(term)
            live &= np.abs(term) > 1e-18
            if not live.any():
                break
            term = np.where(live, nxt, term)
            contrib = np.where(live, term, 0.0)
            # i^m alternates between P (even m) and Q (odd m)
            sign = -1.0 if (m // 2) % 2 else 1.0
            if m % 2 == 0:
                p = p + sign * contrib
            else:
                q = q + sign * contrib
        chi = x - (0.5 * nu + 0.25) * np.pi
        amp = np.sqrt(2.0 / (np.pi * x))
        out.append(amp * (p * np.sin(chi) + q * np.cos(chi)))
    return out[0], out[1]


def bessel_jy(k_max: int, lam) -> HankelTable:
    """Tabulate J_k, Y_k for ``k = 0..k_max`` at argument(s) ``lam > 0``."""
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    if not np.all(np.isfinite(lam_arr)) or np.any(lam_arr <= 0):
        raise ValueError("bessel_jy needs lam > 0; use hankel1_neg for negative arguments")
    # Neumann series needs orders well past x
    n_series = max(k_max, int(np.ceil(lam_arr.max())) + 40, 2)
    jfull = j_miller(n_series, lam_arr)
    j = jfull[:, : k_max + 1]

    y0 = np.empty_like(lam_arr)
    y1 = np.empty_like(lam_arr)
    small = lam_arr <= ASYMPTOTIC_SWITCH
    if small.any():
        y0[small], y1[small] = y01_series(lam_arr[small], jfull[small])
    if (~small).any():
        y0[~small], y1[~small] = y01_asymptotic(lam_arr[~small])

    y = np.empty((k_max + 1, lam_arr.size))
    flags = np.full(y.shape, OK, dtype=np.int8)
    y[0] = y0
    if k_max >= 1:
        y[1] = y1
    two_over_x = 2.0 / lam_arr
    blown = np.zeros(lam_arr.size, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, k_max):
            nxt = k * two_over_x * y[k] - y[k - 1]
            blown |= ~(np.abs(nxt) <= _Y_LIMIT)
            y[k + 1] = np.where(blown, -np.inf, nxt)
            flags[k + 1] = blown
    y, flags = y.T.copy(), flags.T.copy()
    return HankelTable(lam=lam_arr, j=j, y=y, flags=flags)


def hankel1_neg(k: int, s: float, table: HankelTable | None = None) -> complex:
    """H1_|k|(-s) for s > 0 via H1_n(-s) = (-1)^(n-1) conj(H1_n(s))."""
    n = abs(int(k))
    if table is None:
        table = bessel_jy(n, s)
    row = int(np.argmin(np.abs(table.lam - s)))
    if not np.isclose(table.lam[row], s, rtol=0, atol=1e-14 * max(1.0, s)):
        raise ValueError(f"table has no entry for argument {s}")
    if table.flags[row, n] != OK:
        return complex(np.nan, np.nan)
    h = complex(table.j[row, n], table.y[row, n])
    sign = 1.0 if (n - 1) % 2 == 0 else -1.0
    return sign * h.conjugate()


def safe_reciprocal(h, flag):
    """Elementwise 1/h; exactly 0 where ``flag`` marks Y overflow."""
    h = np.asarray(h, dtype=np.complex128)
    flag = np.asarray(flag)
    bad = flag != OK
    with np.errstate(divide="ignore", invalid="ignore"):
        r = 1.0 / np.where(bad, 1.0, h)
    r = np.where(bad, 0.0, r)
    if r.ndim == 0:
        return complex(r)
    return r
