"""Marchenko-Pastur density, quantiles and the bulk-eigenvalue noise estimator.

The zero-excluded MP law with aspect ratio gamma = p/n and scale sigma2 has
density

    f(x) = 1 / (2 pi sigma2) * 1 / (x * min(1, gamma))
           * sqrt((x - sigma2*g-) * (sigma2*g+ - x))

on [sigma2*g-, sigma2*g+] with g+- = (1 +- sqrt(gamma))^2.  Tail integrals
use the substitution x = sigma2*(g- + (g+ - g-) sin^2 theta), which removes
both square-root edge singularities, evaluated with adaptive Gauss-Kronrod
quadrature.  Quantiles come from bisection on the monotone tail function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

__all__ = [
    "MpParams",
    "mp_pdf",
    "mp_upper_tail",
    "mp_upper_quantile",
    "bulk_range",
    "bulk_quantiles",
    "sigma2_hat",
]

_QUAD_TOL = 1e-13
_BISECT_WIDTH = 1e-12


@dataclass(frozen=True)
class MpParams:
    """Aspect ratio gamma = p/n and scale sigma2 of an MP distribution."""

    gamma: float
    sigma2: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")

    @property
    def support(self) -> tuple[float, float]:
        root = math.sqrt(self.gamma)
        return (self.sigma2 * (1 - root) ** 2, self.sigma2 * (1 + root) ** 2)


def mp_pdf(x, params: MpParams):
    """Density of the zero-excluded MP law; 0 outside the support."""
    lo, hi = params.support
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    inside = (x >= lo) & (x <= hi) & (x > 0)
    xi = x[inside]
    const = 1.0 / (2 * math.pi * params.sigma2 * min(1.0, params.gamma))
    out[inside] = const / xi * np.sqrt(np.maximum((xi - lo) * (hi - xi), 0.0))
    return float(out[0]) if scalar else out


def _tail_integrand(params: MpParams):
    lo, hi = params.support
    width = hi - lo
    const = 1.0 / (2 * math.pi * params.sigma2 * min(1.0, params.gamma))

    def g(theta):
        s = math.sin(theta)
        x = lo + width * s * s
        # f(x) dx under x = lo + width*sin^2(theta)
        return const * width * width * (math.sin(2 * theta) ** 2) / (2 * x)

    return g


def mp_upper_tail(x: float, params: MpParams) -> float:
    """Mass of the MP law above ``x``."""
    lo, hi = params.support
    if x <= lo:
        return 1.0
    if x >= hi:
        return 0.0
    theta = math.asin(math.sqrt((x - lo) / (hi - lo)))
    val, _ = integrate.quad(
        _tail_integrand(params), theta, math.pi / 2, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL
    )
    return min(max(val, 0.0), 1.0)


def mp_upper_quantile(prob: float, params: MpParams) -> float:
    """The q with upper-tail mass ``prob``; monotone non-increasing in prob."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"prob must lie in [0, 1], got {prob}")
    lo, hi = params.support
    if prob == 0.0:
        return hi
    if prob == 1.0:
        return lo
    a, b = lo, hi
    # tail(a) = 1 >= prob >= 0 = tail(b); bisect the monotone tail function
    while b - a > _BISECT_WIDTH * max(1.0, hi):
        mid = 0.5 * (a + b)
        if mp_upper_tail(mid, params) > prob:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def bulk_range(p: int, n: int) -> range:
    """Indices k with (p^n)/4 <= k <= 3(p^n)/4, ceil below and floor above."""
    m = min(p, n)
    lo = math.ceil(m / 4)
    hi = math.floor(3 * m / 4)
    if lo > hi or lo < 1:
        raise ValueError(f"empty bulk index range for p={p}, n={n}")
    return range(lo, hi + 1)


@lru_cache(maxsize=64)
def bulk_quantiles(p: int, n: int) -> tuple[tuple[int, float], ...]:
    """(k, q_k) pairs with q_k the k/(p^n)-upper quantile of MP(p/n, 1)."""
    if p < 8 or n < 8:
        raise ValueError("need p, n >= 8 for a non-empty bulk range")
    params = MpParams(gamma=p / n, sigma2=1.0)
    m = min(p, n)
    return tuple((k, mp_upper_quantile(k / m, params)) for k in bulk_range(p, n))


def sigma2_hat(eigs: np.ndarray, p: int, n: int) -> float:
    """Bulk-eigenvalue noise-variance estimator sum(q_k l_k) / sum(q_k^2).

    ``eigs`` are sample eigenvalues in non-increasing order; entry k-1 is the
    k-th largest.  Scale-equivariant: scaling the eigenvalues by t scales the
    result by t.
    """
    eigs = np.asarray(eigs, dtype=float)
    pairs = bulk_quantiles(p, n)
    top_needed = pairs[-1][0]
    if eigs.shape[0] < top_needed:
        raise ValueError(
            f"need at least {top_needed} eigenvalues for p={p}, n={n}, got {eigs.shape[0]}"
        )
    q = np.array([qk for _, qk in pairs])
    lam = np.array([eigs[k - 1] for k, _ in pairs])
    return float((q * lam).sum() / (q * q).sum())
