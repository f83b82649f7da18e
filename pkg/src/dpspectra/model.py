"""Ground-truth spiked covariance models, samplers and neighboring datasets.

A model is Sigma = U diag(spikes) U^T + sigma2 * I_p with orthonormal U and
strictly positive, non-increasing spike eigenvalues (sigma2 excluded).  The
Gaussian sampler uses the factored form U diag(sqrt(spikes)) z + sigma * w,
which is O(pr + p) per sample and exactly multivariate normal; sub-Gaussian
samplers push i.i.d. unit-variance coordinates through the symmetric square
root of Sigma.
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .linalg import orthonormality_defect, symmetrize

__all__ = [
    "DISTRIBUTIONS",
    "SpikedModel",
    "DataMatrix",
    "SnrReport",
    "covariance_of",
    "sample",
    "neighbor",
    "snr_diagnostics",
    "save_data_bin",
    "load_data_bin",
    "save_data_csv",
    "load_data_csv",
    "load_data_auto",
]

#: Supported coordinate laws.  The non-Gaussian ones have i.i.d. zero-mean
#: unit-variance coordinates (Rademacher and uniform(-sqrt(3), sqrt(3))).
DISTRIBUTIONS = ("gaussian", "rademacher_subgaussian", "uniform_subgaussian")

_MAGIC = b"DPSP"


@dataclass(frozen=True)
class SpikedModel:
    """Parameters (U, spikes, sigma2) of a spiked covariance matrix."""

    u: np.ndarray  # p x r orthonormal factor
    spike_eigs: np.ndarray  # length r, strictly positive, non-increasing
    sigma2: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        spikes = np.atleast_1d(np.asarray(self.spike_eigs, dtype=float))
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "spike_eigs", spikes)
        if u.ndim != 2 or u.shape[1] > u.shape[0]:
            raise ValueError(f"U must be p x r with r <= p, got {u.shape}")
        if spikes.ndim != 1 or spikes.shape[0] != u.shape[1]:
            raise ValueError("spike_eigs length must equal the number of columns of U")
        if np.any(spikes <= 0):
            raise ValueError("spike eigenvalues must be strictly positive")
        if np.any(np.diff(spikes) > 0):
            raise ValueError("spike eigenvalues must be non-increasing")
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be strictly positive")
        if orthonormality_defect(u) > 1e-10:
            raise ValueError("U columns are not orthonormal")
        u.setflags(write=False)
        spikes.setflags(write=False)

    @property
    def p(self) -> int:
        return self.u.shape[0]

    @property
    def r(self) -> int:
        return self.u.shape[1]

    @property
    def kappa0(self) -> float:
        """Condition number of the spike block, largest over smallest spike."""
        return float(self.spike_eigs[0] / self.spike_eigs[-1])


@dataclass(frozen=True)
class DataMatrix:
    """A p x n matrix of column samples with a cached sample covariance."""

    columns: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.columns, dtype=float)
        if x.ndim != 2:
            raise ValueError(f"columns must be a 2-d array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("data matrix has non-finite entries")
        object.__setattr__(self, "columns", x)
        x.setflags(write=False)

    @property
    def p(self) -> int:
        return self.columns.shape[0]

    @property
    def n(self) -> int:
        return self.columns.shape[1]

    @cached_property
    def sample_cov(self) -> np.ndarray:
        """Sigma_hat = (1/n) sum_i X_i X_i^T, mirrored exactly."""
        x = self.columns
        cov = symmetrize(x @ x.T / self.n)
        cov.setflags(write=False)
        return cov


def covariance_of(model: SpikedModel) -> np.ndarray:
    """Population covariance U diag(spikes) U^T + sigma2 * I."""
    u = model.u
    sigma = symmetrize((u * model.spike_eigs) @ u.T)
    sigma[np.diag_indices_from(sigma)] += model.sigma2
    return sigma


def _coordinate_draws(shape, dist: str, rng: np.random.Generator) -> np.ndarray:
    if dist == "gaussian":
        return rng.standard_normal(shape)
    if dist == "rademacher_subgaussian":
        return rng.integers(0, 2, size=shape).astype(float) * 2.0 - 1.0
    if dist == "uniform_subgaussian":
        s = np.sqrt(3.0)
        return rng.uniform(-s, s, size=shape)
    raise ValueError(f"unknown distribution {dist!r}, expected one of {DISTRIBUTIONS}")


def sample(
    model: SpikedModel,
    n: int,
    dist: str = "gaussian",
    rng: np.random.Generator | None = None,
) -> DataMatrix:
    """Draw n i.i.d. columns with population covariance ``covariance_of(model)``.

    For ``dist="gaussian"`` the draw order is: the r x n spike coordinates
    first, then the p x n isotropic part.  Fixed generator state gives a
    bit-identical result.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    if rng is None:
        rng = np.random.default_rng()
    sigma = np.sqrt(model.sigma2)
    if dist == "gaussian":
        z = rng.standard_normal((model.r, n))
        w = rng.standard_normal((model.p, n))
        x = model.u @ (np.sqrt(model.spike_eigs)[:, None] * z) + sigma * w
    else:
        w = _coordinate_draws((model.p, n), dist, rng)
        # symmetric square root applied in factored O(pr) form
        scale = np.sqrt(model.spike_eigs + model.sigma2) - sigma
        x = model.u @ (scale[:, None] * (model.u.T @ w)) + sigma * w
    return DataMatrix(columns=x)


def neighbor(
    x: DataMatrix,
    i: int,
    model: SpikedModel,
    dist: str = "gaussian",
    rng: np.random.Generator | None = None,
) -> DataMatrix:
    """Replace column ``i`` (0-based) by a fresh i.i.d. draw from the model.

    Every other column is bit-identical to the input.
    """
    if not 0 <= i < x.n:
        raise IndexError(f"column index {i} out of range for n={x.n}")
    if x.p != model.p:
        raise ValueError("data matrix and model dimensions differ")
    fresh = sample(model, 1, dist=dist, rng=rng).columns[:, 0]
    cols = x.columns.copy()
    cols[:, i] = fresh
    return DataMatrix(columns=cols)


@dataclass(frozen=True)
class SnrReport:
    """Signal-to-noise diagnostics for a model at sample size n."""

    snr: float  # lambda_r / sigma2, conservative over the spikes
    threshold: float  # p/n + sqrt(p/n)
    passes: bool
    kappa0: float
    effective_rank: float

    def warn_if_low(self, context: str = "") -> None:
        if not self.passes:
            warnings.warn(
                f"signal-to-noise ratio {self.snr:.3g} is below the threshold "
                f"{self.threshold:.3g}{'; ' + context if context else ''}",
                RuntimeWarning,
                stacklevel=3,
            )


def snr_diagnostics(model: SpikedModel, n: int) -> SnrReport:
    """SNR against the p/n + sqrt(p/n) threshold, plus kappa0 and effective rank.

    The effective rank is trace(Sigma) / ||Sigma||, which reduces to
    (r*lam + p*sigma2) / (lam + sigma2) when all spikes are equal.
    """
    p = model.p
    gamma = p / n
    snr = float(model.spike_eigs[-1] / model.sigma2)
    threshold = gamma + np.sqrt(gamma)
    trace = float(model.spike_eigs.sum() + p * model.sigma2)
    opnorm = float(model.spike_eigs[0] + model.sigma2)
    return SnrReport(
        snr=snr,
        threshold=float(threshold),
        passes=snr >= threshold,
        kappa0=model.kappa0,
        effective_rank=trace / opnorm,
    )


def save_data_bin(x: DataMatrix, path) -> None:
    """Write a data matrix as magic "DPSP", uint32 p, uint32 n (little-endian),
    then the p x n entries row-major as little-endian float64."""
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", x.p, x.n))
        fh.write(np.ascontiguousarray(x.columns, dtype="<f8").tobytes())


def load_data_bin(path) -> DataMatrix:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path} is not a DPSP data file")
    p, n = struct.unpack("<II", raw[4:12])
    expected = 12 + 8 * p * n
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    cols = np.frombuffer(raw, dtype="<f8", offset=12).reshape(p, n).astype(float)
    return DataMatrix(columns=cols)


def save_data_csv(x: DataMatrix, path) -> None:
    """Write samples as CSV columns: row i, column j holds coordinate i of sample j."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in x.columns:
            writer.writerow([repr(float(v)) for v in row])


def load_data_csv(path) -> DataMatrix:
    path = Path(path)
    with path.open("r", newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path} is empty")
    return DataMatrix(columns=np.asarray(rows, dtype=float))


def load_data_auto(path) -> DataMatrix:
    """Load a data matrix, sniffing the DPSP binary magic and falling back to CSV."""
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(4)
    if head == _MAGIC:
        return load_data_bin(path)
    return load_data_csv(path)
