"""Smooth cutoff building blocks.

All cutoffs in the package (mollifier bump, psi/beta cutoffs, window
functions, Littlewood-Paley profiles) come from the same C-infinity step,
so oscillatory-integral and Fourier-decay checks are not polluted by
finite-smoothness artifacts.
"""

from functools import lru_cache

import numpy as np
from scipy.integrate import quad


def smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, strictly monotone between.

    Built from g(u) = exp(-1/u) as g(u) / (g(u) + g(1-u)).
    """
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    out[u >= 1.0] = 1.0
    mid = (u > 0.0) & (u < 1.0)
    if np.any(mid):
        um = u[mid]
        a = np.exp(-1.0 / um)
        b = np.exp(-1.0 / (1.0 - um))
        out[mid] = a / (a + b)
    if out.ndim == 0:
        return float(out)
    return out


def plateau(t, lo, hi, margin):
    """C-infinity plateau: 1 on [lo, hi], 0 outside [lo - margin, hi + margin]."""
    t = np.asarray(t, dtype=float)
    return smooth_step((t - (lo - margin)) / margin) * smooth_step(((hi + margin) - t) / margin)


def bump_raw(u):
    """Unnormalized even bump exp(-1/(1-(u/2)^2)) supported on (-2, 2)."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    v = u / 2.0
    inside = np.abs(v) < 1.0
    if np.any(inside):
        out[inside] = np.exp(-1.0 / (1.0 - v[inside] ** 2))
    if out.ndim == 0:
        return float(out)
    return out


@lru_cache(maxsize=None)
def bump_norm_constant() -> float:
    """c such that c * bump_raw has unit integral."""
    val, _ = quad(lambda u: float(bump_raw(u)), -2.0, 2.0, limit=200)
    return 1.0 / val


@lru_cache(maxsize=None)
def bump_l2_constant() -> float:
    """Integral of the unit-mass profile squared; int rho_eps^2 = this / eps."""
    c = bump_norm_constant()
    val, _ = quad(lambda u: (c * float(bump_raw(u))) ** 2, -2.0, 2.0, limit=200)
    return val


def bump_profile(u):
    """The package's unit-mass C-infinity mollifier profile on (-2, 2)."""
    return bump_norm_constant() * bump_raw(u)
