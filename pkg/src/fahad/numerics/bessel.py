"""Integer-order Bessel functions of the first kind for real arguments.

Small arguments (|z| < 12) use the ascending power series; larger ones use Miller's
downward recurrence normalized with the Neumann sum J_0 + 2*sum_k J_2k = 1.
Negative orders and arguments follow J_{-l}(z) = (-1)^l J_l(z) = J_l(-z).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special

SERIES_CROSSOVER = 12.0
MAX_ABS_Z = 1e3
_SERIES_TERMS = 48
_SEED = 1e-30
_TERM_FLOOR = 1e-20
_BIG = 1e200


def _check_range(z, z_limit):
    if not np.all(np.isfinite(z)):
        raise ValueError("Bessel argument must be finite")
    if z.size and np.max(np.abs(z)) > z_limit:
        raise ValueError(f"|z| = {np.max(np.abs(z)):g} exceeds the supported range {z_limit:g}")


def _series_table(lmax: int, z: np.ndarray) -> np.ndarray:
    """J_0..J_lmax at nonnegative z by the ascending series; shape (lmax+1, z.size)."""
    half = 0.5 * z
    orders = np.arange(lmax + 1)[:, None]
    lead = np.empty((lmax + 1, z.size))
    lead[0] = 1.0
    for l in range(1, lmax + 1):
        lead[l] = lead[l - 1] * half / l
    term = lead.copy()
    total = lead.copy()
    q = -(half * half)[None, :]
    hi = lmax + 1
    for k in range(_SERIES_TERMS):
        term[:hi] = term[:hi] * q / ((k + 1) * (k + 1 + orders[:hi]))
        total[:hi] += term[:hi]
        if (k + 1) ** 2 > SERIES_CROSSOVER ** 2 / 4.0:
            # every ratio is now below one, so rows whose terms vanished stay converged
            live = np.flatnonzero(np.max(np.abs(term[:hi]), axis=1) > _TERM_FLOOR)
            if live.size == 0:
                break
            hi = int(live[-1]) + 1
    return total


def _miller_table(lmax: int, z: np.ndarray) -> np.ndarray:
    """J_0..J_lmax at positive z by normalized downward recurrence."""
    start = np.ceil(np.maximum(z + 10.0 * np.cbrt(z) + 30.0, lmax + 20.0)).astype(int)
    top = int(start.max())
    out = np.zeros((lmax + 1, z.size))
    up2 = np.zeros(z.size)
    up1 = np.zeros(z.size)
    norm = np.zeros(z.size)
    inv_z = 2.0 / z
    for l in range(top, -1, -1):
        cur = (l + 1) * inv_z * up1 - up2
        cur = np.where(start == l, _SEED, cur)
        if l <= lmax:
            out[l] = cur
        if l % 2 == 0:
            norm += cur if l == 0 else 2.0 * cur
        up2, up1 = up1, cur
        big = np.abs(cur) > _BIG
        if np.any(big):
            up2[big] /= _BIG
            up1[big] /= _BIG
            norm[big] /= _BIG
            if l <= lmax:
                out[l:, big] /= _BIG
    return out / norm


def bessel_j_orders(lmax: int, z, z_limit: float = MAX_ABS_Z) -> np.ndarray:
    """Table of J_l(z) for l = 0..lmax.

    Args:
        lmax: highest order, >= 0.
        z: real scalar or array.
        z_limit: largest accepted |z|.

    Returns:
        Array of shape ``(lmax + 1,) + np.shape(z)``.
    """
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    z = np.asarray(z, dtype=float)
    _check_range(z, z_limit)
    flat = z.ravel()
    az = np.abs(flat)
    out = np.zeros((lmax + 1, flat.size))
    small = az < SERIES_CROSSOVER
    if np.any(small):
        out[:, small] = _series_table(lmax, az[small])
    if np.any(~small):
        out[:, ~small] = _miller_table(lmax, az[~small])
    odd = np.arange(lmax + 1) % 2 == 1
    out[np.ix_(odd, flat < 0)] *= -1.0
    return out.reshape((lmax + 1,) + z.shape)


def bessel_j(order: int, z, z_limit: float = MAX_ABS_Z):
    """J_order(z) for integer ``order`` (any sign) and real ``z`` (scalar or array)."""
    order = int(order)
    m = abs(order)
    val = bessel_j_orders(m, z, z_limit)[m]
    if order < 0 and m % 2 == 1:
        val = -val
    return val if np.ndim(val) else float(val)


@lru_cache(maxsize=None)
def _first_maxima(lmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Location and height of the first maximum of J_l for l = 1..lmax.

    |J_l| rises monotonically up to its first maximum and every later extremum is
    lower, so these two numbers give the running maximum of |J_l| on [0, z].
    """
    loc = np.array([special.jnp_zeros(l, 1)[0] for l in range(1, lmax + 1)])
    height = np.array([abs(bessel_j(l, z)) for l, z in zip(range(1, lmax + 1), loc)])
    return loc, height


def truncation_orders(z_max, eps: float = 1e-3) -> np.ndarray:
    """Vectorized ``truncation_order`` over an array of z_max values."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    z = np.abs(np.asarray(z_max, dtype=float))
    flat = z.ravel()
    if flat.size == 0:
        return np.zeros(z.shape, dtype=int)
    _check_range(flat, MAX_ABS_Z)
    zt = float(flat.max())
    lmax = int(np.ceil(zt + 10.0 * np.cbrt(zt) + 30.0))
    loc, height = _first_maxima(lmax)
    running = np.abs(bessel_j_orders(lmax, flat))
    past = loc[:, None] <= flat[None, :]
    running[1:] = np.where(past, height[:, None], running[1:])
    above = running >= eps
    # last order whose running maximum still reaches eps; orders beyond it all fall below
    last = np.where(above.any(axis=0), lmax - np.argmax(above[::-1], axis=0), 0)
    return last.reshape(z.shape).astype(int)


def truncation_order(z_max: float, eps: float = 1e-3) -> int:
    """Smallest L1 >= 0 such that |J_l(z)| < eps for every l > L1 and every |z| <= z_max.

    The expansion is evaluated at every aperture up to z_max, so the tail must be
    small over that whole range. This also keeps the order monotone in z_max and eps
    where |J_l| oscillates through zero or its envelope decays with z.
    """
    return int(truncation_orders(z_max, eps))
