"""Dense symmetric-matrix primitives: eigendecompositions, Schatten norms,
orthonormal factors and subspace distances.

All matrices are plain float64 numpy arrays.  Symmetric inputs are expected
to be exactly mirrored; use :func:`symmetrize` when building one from noisy
or triangular data.  Schatten orders accept any float ``q >= 1`` plus the
distinguished tag ``"inf"`` (``math.inf`` is normalized to the tag).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

__all__ = [
    "EigenSolverError",
    "SpectralDecomposition",
    "symmetrize",
    "require_symmetric",
    "eig_sym",
    "top_r",
    "schatten_norm",
    "projection_distance",
    "random_orthonormal",
    "orthonormality_defect",
]

# Relative tolerance for the eigendecomposition reconstruction check.
_RECON_RTOL = 1e-8
_SYM_RTOL = 1e-8


class EigenSolverError(RuntimeError):
    """Raised when the symmetric eigensolver fails to converge.

    Carries the residual reported by the failed factorization attempt.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Mirror the upper triangle (including diagonal) onto the lower one."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    out = np.triu(m)
    out = out + np.triu(m, 1).T
    return out


def require_symmetric(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Validate a finite symmetric square matrix and return it as float64."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > _SYM_RTOL * scale:
        raise ValueError(f"{name} is not symmetric")
    return m


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the first nonzero coordinate of each column positive.

    Sign convention for reproducible serialization only; all downstream
    metrics are projector-based and insensitive to it.
    """
    v = vectors.copy()
    for j in range(v.shape[1]):
        col = v[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-14)
        if nz.size and col[nz[0]] < 0:
            v[:, j] = -col
    return v


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in non-increasing order with matching orthonormal eigenvectors."""

    eigenvalues: np.ndarray  # shape (p,), descending
    eigenvectors: np.ndarray  # shape (p, p), columns match eigenvalues

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def eig_sym(m: np.ndarray) -> SpectralDecomposition:
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    Backed by the LAPACK divide-and-conquer solver (tridiagonalization plus
    implicit-shift iterations).  Verifies the reconstruction ``V diag(w) V^T``
    against the input to ``1e-8`` relative Frobenius error.
    """
    m = require_symmetric(m)
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenSolverError(f"symmetric eigensolver failed: {exc}") from exc
    order = np.argsort(w)[::-1]
    w = w[order]
    v = _fix_signs(v[:, order])
    norm_m = np.linalg.norm(m)
    residual = np.linalg.norm((v * w) @ v.T - m)
    if residual > _RECON_RTOL * max(norm_m, 1e-300):
        raise EigenSolverError(
            f"eigendecomposition residual {residual:.3e} exceeds tolerance",
            residual=residual,
        )
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def top_r(m: np.ndarray, r: int) -> np.ndarray:
    """Orthonormal basis (p x r) of the r leading eigenvectors of ``m``.

    Under degenerate eigenvalues the solver's output order is kept; the
    choice is immaterial for projector-based metrics.
    """
    m = np.asarray(m, dtype=float)
    p = m.shape[0]
    if not 1 <= r <= p:
        raise ValueError(f"rank r={r} must be in [1, {p}]")
    dec = eig_sym(m)
    return dec.eigenvectors[:, :r].copy()


def _normalize_q(q) -> float:
    if isinstance(q, str):
        if q == "inf":
            return math.inf
        raise ValueError(f"unknown Schatten order tag {q!r}")
    q = float(q)
    if math.isinf(q) and q > 0:
        return math.inf
    if q < 1:
        raise ValueError(f"Schatten order must satisfy q >= 1, got {q}")
    return q


def schatten_norm(m: np.ndarray, q) -> float:
    """Schatten-q norm of a symmetric matrix.

    ``q=2`` is the Frobenius norm, ``q=1`` the nuclear norm and the tag
    ``"inf"`` the spectral norm.
    """
    q = _normalize_q(q)
    m = require_symmetric(m)
    eigs = np.abs(np.linalg.eigvalsh(m))
    if math.isinf(q):
        return float(eigs.max(initial=0.0))
    return float((eigs**q).sum() ** (1.0 / q))


def projection_distance(u1: np.ndarray, u2: np.ndarray, q=2) -> float:
    """Schatten-q distance between the projectors of two orthonormal factors.

    Invariant under right-multiplication of either factor by any r x r
    orthogonal rotation.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.shape != u2.shape:
        raise ValueError(f"factor shapes differ: {u1.shape} vs {u2.shape}")
    diff = u1 @ u1.T - u2 @ u2.T
    return schatten_norm(symmetrize(diff), q)


def random_orthonormal(p: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-like p x r orthonormal factor.

    Left singular vectors of a p x r matrix with i.i.d. standard normal
    entries; deterministic given the generator state.
    """
    if not 1 <= r <= p:
        raise ValueError(f"need 1 <= r <= p, got r={r}, p={p}")
    g = rng.standard_normal((p, r))
    u, _, _ = np.linalg.svd(g, full_matrices=False)
    return u


def orthonormality_defect(u: np.ndarray) -> float:
    """max-norm of U^T U - I, used by validity checks."""
    u = np.asarray(u, dtype=float)
    gram = u.T @ u
    return float(np.abs(gram - np.eye(u.shape[1])).max())
