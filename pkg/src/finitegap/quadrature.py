"""Chebyshev-grid and tanh-sinh quadrature helpers.

Everything on a band [a, b] is pulled back through x = mid + rad*cos(theta).
Smooth even densities in theta are represented by cosine-series coefficients
c_k (h(theta) = sum_k c_k cos(k theta)); the midpoint rule on the theta grid
is then spectrally accurate, and the DCT-II of the samples returns c_k.
"""
from __future__ import annotations

import numpy as np
from scipy.fft import dct

from .errors import AccuracyError


def cosine_nodes(n: int) -> np.ndarray:
    """Midpoint theta grid on (0, pi); never touches the endpoints."""
    return np.pi * (np.arange(n) + 0.5) / n


def cos_coeffs(samples: np.ndarray) -> np.ndarray:
    """Cosine-series coefficients from samples on cosine_nodes(len(samples)).

    Returns c with h(theta) ~= sum_k c[k] cos(k*theta); c[0] is the mean of h,
    so integral of h over (0, pi) equals pi*c[0].
    """
    n = len(samples)
    c = dct(samples, type=2) / n
    c[0] *= 0.5
    return c


def eval_cos_series(c: np.ndarray, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, float))
    k = np.arange(len(c))
    return np.cos(theta[:, None] * k[None, :]) @ c


def adaptive_cos_coeffs(fn, n0: int = 256, n_max: int = 4096,
                        rel_tol: float = 1e-13, strict: bool = True) -> np.ndarray:
    """Sample fn(theta) on doubling grids until the coefficient tail is negligible.

    The tail criterion is the chebfun one: the top quarter of coefficients must
    fall below rel_tol times the largest coefficient.
    """
    n = n0
    while True:
        c = cos_coeffs(fn(cosine_nodes(n)))
        scale = np.abs(c).max()
        if scale == 0.0:
            return c[:1]
        tail = np.abs(c[(3 * n) // 4:]).max()
        if tail <= rel_tol * scale:
            return _trim(c, rel_tol)
        if n >= n_max:
            if strict:
                raise AccuracyError(
                    f"cosine coefficients did not decay below {rel_tol:g} "
                    f"by n={n_max} (tail {tail / scale:.2e})")
            return c
        n *= 2


def _trim(c: np.ndarray, rel_tol: float) -> np.ndarray:
    scale = np.abs(c).max()
    keep = np.nonzero(np.abs(c) > 1e-2 * rel_tol * scale)[0]
    return c[: keep[-1] + 1] if len(keep) else c[:1]


def inv_joukowski(zeta) -> np.ndarray:
    """u with zeta = (u + 1/u)/2 and |u| <= 1.

    Maps C \\ [-1,1] into the open unit disk; on [-1,1] itself |u| = 1.
    Computed as 1/(zeta + s) with s = sqrt(zeta-1)sqrt(zeta+1) ~ zeta at
    infinity: algebraically equal to zeta - s but free of the cancellation
    that form suffers for large |zeta|.
    """
    zeta = np.asarray(zeta, complex)
    s = np.sqrt(zeta - 1) * np.sqrt(zeta + 1)
    return 1.0 / (zeta + s)


def tanh_sinh_rule(level: int, a: float, b: float):
    """Tanh-sinh nodes/weights on (a, b); nodes stay strictly interior."""
    h = 2.0 ** (-level)
    k = np.arange(-int(np.ceil(6.0 / h)), int(np.ceil(6.0 / h)) + 1)
    t = k * h
    u = 0.5 * np.pi * np.sinh(t)
    x = np.tanh(u)
    w = h * 0.5 * np.pi * np.cosh(t) / np.cosh(u) ** 2
    keep = (1.0 - np.abs(x)) > 1e-17
    x, w = x[keep], w[keep]
    mid, rad = (a + b) / 2, (b - a) / 2
    return mid + rad * x, rad * w


def de_quad(fn, a: float, b: float, tol: float = 1e-10, max_level: int = 11):
    """Doubling tanh-sinh quadrature; handles endpoint log/algebraic singularities.

    Returns (value, level). Raises AccuracyError if the doubling never settles.
    Infinite values from fn propagate (used for the -inf Szego sentinel).
    """
    prev = None
    delta = np.inf
    for level in range(4, max_level + 1):
        x, w = tanh_sinh_rule(level, a, b)
        vals = fn(x)
        if np.any(np.isneginf(vals)):
            return -np.inf, level
        val = float(np.sum(w * vals))
        if prev is not None:
            delta = abs(val - prev)
            if delta <= tol * max(1.0, abs(val)):
                return val, level
        prev = val
    raise AccuracyError(f"tanh-sinh quadrature did not converge (last delta "
                        f"{delta:.2e}, tol {tol:g})")
