"""Executable expansion of the top-r projector perturbation.

For a spiked covariance Sigma = U diag(L) U^T + sigma2 I and a symmetric
perturbation D with 2 ||D|| <= L_r, the projector of Sigma + D satisfies

    P_hat - P = sum_{k >= 1} S_k(D),

where the k-th order term sums (2k choose k) signed products

    S_k(D) = sum_{s_1 + ... + s_{k+1} = k} (-1)^(1 + tau(s))
             Q^{-s_1} D Q^{-s_2} ... D Q^{-s_{k+1}},

with Q^0 the projector onto the orthogonal complement of U, Q^{-t} =
U diag(L)^{-t} U^T for t >= 1, and tau(s) the number of positive parts.
Used as a test oracle against the eigensolver route, never in the
production estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .linalg import require_symmetric, symmetrize, top_r
from .model import SpikedModel, covariance_of

__all__ = [
    "CompositionIndex",
    "compositions",
    "q_power",
    "s_term",
    "series_tail_bound",
    "reconstruct_projector_diff",
    "projector_diff_exact",
    "first_order_subspace_bound",
]

#: Hard cap on the expansion order; cost grows as C(2k, k) * k products.
MAX_ORDER = 8


@dataclass(frozen=True)
class CompositionIndex:
    """A weak composition of k into k+1 parts with its positive-part count."""

    s: tuple[int, ...]
    tau: int

    @classmethod
    def of(cls, s: tuple[int, ...]) -> "CompositionIndex":
        return cls(s=s, tau=sum(1 for v in s if v > 0))

    @property
    def sign(self) -> int:
        return -1 if self.tau % 2 == 0 else 1  # (-1)^(1 + tau)


def compositions(k: int) -> list[CompositionIndex]:
    """All weak compositions of k into k+1 parts, sorted; C(2k, k) of them."""
    if k < 1:
        raise ValueError("order k must be >= 1")

    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], remaining: int, slots: int) -> None:
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for v in range(remaining + 1):
            rec(prefix + (v,), remaining - v, slots - 1)

    rec((), k, k + 1)
    out.sort()
    return [CompositionIndex.of(s) for s in out]


def q_power(model: SpikedModel, s: int) -> np.ndarray:
    """Q^0 = I - U U^T for s == 0, else U diag(spikes)^(-s) U^T."""
    if s < 0:
        raise ValueError("exponent must be non-negative")
    u = model.u
    if s == 0:
        return symmetrize(np.eye(model.p) - u @ u.T)
    return symmetrize((u * model.spike_eigs ** (-float(s))) @ u.T)


def s_term(model: SpikedModel, delta: np.ndarray, k: int) -> np.ndarray:
    """The k-th order term of the projector expansion, evaluated exactly."""
    if k < 1:
        raise ValueError("order k must be >= 1")
    if k > MAX_ORDER:
        raise ValueError(f"order k={k} exceeds the cost guard {MAX_ORDER}")
    delta = require_symmetric(delta, "delta")
    if delta.shape[0] != model.p:
        raise ValueError("perturbation dimension does not match the model")
    powers = {t: q_power(model, t) for t in range(k + 1)}
    total = np.zeros((model.p, model.p))
    for comp in compositions(k):
        factors = [powers[comp.s[0]]]
        for sj in comp.s[1:]:
            factors.append(delta)
            factors.append(powers[sj])
        total += comp.sign * reduce(np.matmul, factors)
    return total


def series_tail_bound(delta_norm: float, lam_r: float, K: int) -> float:
    """Geometric bound on the spectral norm of the truncated tail.

    The term ratio is at most 4 ||D|| / L_r, so the tail after order K is
    bounded by C(2K+2, K+1) x^(K+1) / (1 - 4x) when 4x < 1, with
    x = ||D|| / L_r; returns inf otherwise.
    """
    x = delta_norm / lam_r
    if 4 * x >= 1:
        return math.inf
    return math.comb(2 * K + 2, K + 1) * x ** (K + 1) / (1.0 - 4.0 * x)


def reconstruct_projector_diff(
    model: SpikedModel, delta: np.ndarray, K: int
) -> tuple[np.ndarray, float]:
    """Partial sum of the expansion up to order K with its analytic tail bound.

    Requires the validity condition 2 ||D|| <= L_r.
    """
    if K < 1:
        raise ValueError("need K >= 1")
    if K > MAX_ORDER:
        raise ValueError(f"K={K} exceeds the cost guard {MAX_ORDER}")
    delta = require_symmetric(delta, "delta")
    delta_norm = float(np.linalg.norm(delta, 2))
    lam_r = float(model.spike_eigs[-1])
    if 2 * delta_norm > lam_r:
        raise ValueError(
            f"expansion invalid: 2 ||delta|| = {2 * delta_norm:.3g} exceeds "
            f"the smallest spike {lam_r:.3g}"
        )
    total = np.zeros((model.p, model.p))
    for k in range(1, K + 1):
        total += s_term(model, delta, k)
    return total, series_tail_bound(delta_norm, lam_r, K)


def projector_diff_exact(model: SpikedModel, delta: np.ndarray) -> np.ndarray:
    """Eigensolver route: top-r projector of Sigma + D minus U U^T."""
    delta = require_symmetric(delta, "delta")
    u_hat = top_r(covariance_of(model) + delta, model.r)
    return u_hat @ u_hat.T - model.u @ model.u.T


def first_order_subspace_bound(
    model: SpikedModel, delta: np.ndarray, slack: float = 1.0
) -> float:
    """Deterministic spectral-norm bound on the projector perturbation.

        2 ||L^-1 U^T D U_perp|| + 6 (4 + slack) ||D|| ||U^T D U_perp|| / (slack L_r^2)

    Valid when L_r >= (4 + slack) ||D||; used in tests as a domination check.
    """
    if slack <= 0:
        raise ValueError("slack must be positive")
    delta = require_symmetric(delta, "delta")
    lam_r = float(model.spike_eigs[-1])
    delta_norm = float(np.linalg.norm(delta, 2))
    if lam_r < (4.0 + slack) * delta_norm:
        raise ValueError(
            f"bound invalid: smallest spike {lam_r:.3g} is below "
            f"(4 + slack) ||delta|| = {(4 + slack) * delta_norm:.3g}"
        )
    u = model.u
    # U_perp U_perp^T acts as I - U U^T; compute U^T D U_perp via the complement
    p = model.p
    u_perp = np.linalg.svd(np.eye(p) - u @ u.T)[0][:, : p - model.r]
    cross = u.T @ delta @ u_perp
    cross_norm = float(np.linalg.norm(cross, 2))
    lead = float(np.linalg.norm((1.0 / model.spike_eigs)[:, None] * cross, 2))
    return 2.0 * lead + 6.0 * (4.0 + slack) * delta_norm * cross_norm / (slack * lam_r**2)
