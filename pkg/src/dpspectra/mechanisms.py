"""Gaussian-mechanism estimators for private PCA and spiked covariance.

The pipeline privatizes the sample spectral projector and the projected
eigenvalue block separately, then assembles

    Sigma_tilde = U_tilde Lambda_tilde U_tilde^T + sigma2 * I.

Lambda_tilde is a full r x r symmetric matrix rather than a diagonal: the
noised projector's eigenbasis is only determined up to an r x r rotation, so
noise is added to U_tilde^T (Sigma_hat - sigma2 I) U_tilde, absorbing that
rotation.  Budget accounting is a fixed two-way split between the projector
and eigenvalue stages when sigma2 is known, and a three-way split including
a private noise-variance estimate otherwise.

Privacy here is the per-dataset, high-probability flavor: samples are never
truncated, and the calibrated sensitivities hold with probability rapidly
approaching one under the spiked model rather than in the worst case.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import sensitivity as sens
from .linalg import orthonormality_defect, symmetrize, top_r
from .model import DataMatrix
from .mp import sigma2_hat

__all__ = [
    "PrivacyBudget",
    "DpEstimate",
    "gaussian_mechanism_matrix",
    "gaussian_noise_sd",
    "stage_noise_sd",
    "dp_pca",
    "dp_eigenvalues",
    "dp_covariance",
    "dp_estimate",
    "dp_sigma2",
    "dp_rank",
    "dp_lambda",
    "psd_project",
]


@dataclass(frozen=True)
class PrivacyBudget:
    """Total (epsilon, delta) with the split policy across sub-mechanisms."""

    epsilon: float
    delta: float
    split: str = "halves"  # "halves" (known sigma2) or "thirds" (private sigma2)

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.split not in ("halves", "thirds"):
            raise ValueError(f"unknown split {self.split!r}")

    @property
    def stages(self) -> int:
        return 2 if self.split == "halves" else 3

    def stage_budget(self) -> tuple[float, float]:
        """The per-stage (epsilon_i, delta_i); stages sum to the total."""
        k = self.stages
        return (self.epsilon / k, self.delta / k)


def gaussian_noise_sd(omega: float, eps: float, delta: float) -> float:
    """Per-entry noise sd sqrt(2) * omega * sqrt(ln(1.25/delta)) / eps."""
    if omega < 0:
        raise ValueError("sensitivity must be non-negative")
    if eps <= 0 or not 0 < delta < 1:
        raise ValueError(f"invalid budget eps={eps}, delta={delta}")
    return omega * math.sqrt(2.0 * math.log(1.25 / delta)) / eps


def stage_noise_sd(omega: float, budget: PrivacyBudget) -> float:
    """Noise sd for one stage of the split pipeline.

    For the two-way split this is sqrt(8 * omega^2 * ln(2.5/delta)) / eps and
    for the three-way split sqrt(18 * omega^2 * ln(3.75/delta)) / eps, both
    written here through the single-mechanism formula at the stage budget.
    """
    return gaussian_noise_sd(omega, *budget.stage_budget())


def _symmetric_noise(dim: int, sd: float, rng: np.random.Generator) -> np.ndarray:
    z = np.zeros((dim, dim))
    rows, cols = np.triu_indices(dim)
    z[rows, cols] = rng.normal(0.0, sd, size=rows.shape[0])
    z[cols, rows] = z[rows, cols]
    return z


def gaussian_mechanism_matrix(
    m: np.ndarray,
    omega: float,
    eps: float,
    delta: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Release M + Z with symmetric Z, entries i.i.d. on and above the diagonal.

    The entry variance is 2 * omega^2 * ln(1.25/delta) / eps^2 for a
    statistic with Frobenius sensitivity omega.  omega == 0 returns M
    unchanged.
    """
    m = symmetrize(m)
    sd = gaussian_noise_sd(omega, eps, delta)
    if sd == 0.0:
        return m
    return m + _symmetric_noise(m.shape[0], sd, rng)


def dp_pca(
    x: DataMatrix,
    r: int,
    delta1: float,
    budget: PrivacyBudget,
    rng: np.random.Generator,
) -> np.ndarray:
    """Private top-r factor: eigenvectors of the noised sample projector.

    Adds symmetric Gaussian noise calibrated to the projector sensitivity
    ``delta1`` at this stage's share of the budget, then re-extracts an
    orthonormal top-r basis (post-processing keeps the guarantee).
    """
    if r > x.p:
        raise ValueError(f"rank r={r} exceeds dimension p={x.p}")
    u_hat = top_r(x.sample_cov, r)
    projector = symmetrize(u_hat @ u_hat.T)
    sd = stage_noise_sd(delta1, budget)
    if sd > 0.0:
        projector = projector + _symmetric_noise(x.p, sd, rng)
    return top_r(projector, r)


def dp_eigenvalues(
    x: DataMatrix,
    u_tilde: np.ndarray,
    sigma2: float,
    delta2: float,
    budget: PrivacyBudget,
    rng: np.random.Generator,
) -> np.ndarray:
    """Private r x r eigenvalue block U~^T (Sigma_hat - sigma2 I) U~ + E."""
    u_tilde = np.asarray(u_tilde, dtype=float)
    if u_tilde.shape[0] != x.p:
        raise ValueError("factor and data dimensions differ")
    if orthonormality_defect(u_tilde) > 1e-8:
        raise ValueError("u_tilde is not orthonormal")
    r = u_tilde.shape[1]
    core = u_tilde.T @ x.sample_cov @ u_tilde
    core[np.diag_indices(r)] -= sigma2
    lam = symmetrize(core)
    sd = stage_noise_sd(delta2, budget)
    if sd > 0.0:
        lam = lam + _symmetric_noise(r, sd, rng)
    return lam


def dp_covariance(u_tilde: np.ndarray, lam_tilde: np.ndarray, sigma2: float) -> np.ndarray:
    """Assemble U~ Lambda~ U~^T + sigma2 I.

    Deterministic post-processing; the result is symmetric but not
    necessarily positive semidefinite (see :func:`psd_project`).
    """
    u_tilde = np.asarray(u_tilde, dtype=float)
    lam_tilde = np.asarray(lam_tilde, dtype=float)
    if lam_tilde.shape != (u_tilde.shape[1], u_tilde.shape[1]):
        raise ValueError(
            f"eigenvalue block shape {lam_tilde.shape} does not match rank {u_tilde.shape[1]}"
        )
    out = symmetrize(u_tilde @ lam_tilde @ u_tilde.T)
    out[np.diag_indices_from(out)] += sigma2
    return out


def psd_project(m: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues at zero.  Optional post-processing, off by default."""
    w, v = np.linalg.eigh(symmetrize(m))
    return symmetrize((v * np.maximum(w, 0.0)) @ v.T)


def dp_sigma2(
    x: DataMatrix,
    delta3: float,
    eps: float,
    delta: float,
    rng: np.random.Generator,
) -> float:
    """Private noise variance |sigma2_hat + N(0, 18 (delta3/eps)^2 ln(3.75/delta))|.

    ``eps`` and ``delta`` are the full budget; the variance already encodes
    the one-third allocation of the three-way split.
    """
    eigs = np.sort(np.linalg.eigvalsh(x.sample_cov))[::-1]
    base = sigma2_hat(eigs, x.p, x.n)
    sd = delta3 * math.sqrt(18.0 * math.log(3.75 / delta)) / eps
    if sd > 0.0:
        base = base + rng.normal(0.0, sd)
    return abs(base)


def dp_rank(
    eigs: np.ndarray,
    delta2: float,
    eps: float,
    delta: float,
    R: int,
    rng: np.random.Generator,
) -> int:
    """Eigen-ratio rank estimate from noised consecutive eigenvalue ratios.

    Perturbs the leading R+1 sample eigenvalues with i.i.d. noise at the
    eigenvalue-stage level and returns the argmax over k <= R of the ratio
    of consecutive noised values.  Ratios with a non-positive denominator
    are excluded; ties break toward the smallest index.
    """
    eigs = np.asarray(eigs, dtype=float)
    if R < 1 or R + 1 > eigs.shape[0]:
        raise ValueError(f"need 1 <= R <= {eigs.shape[0] - 1}, got R={R}")
    sd = delta2 * math.sqrt(8.0 * math.log(2.5 / delta)) / eps
    noised = eigs[: R + 1] + (rng.normal(0.0, sd, size=R + 1) if sd > 0 else 0.0)
    num, den = noised[:-1], noised[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(den > 0, num / den, -np.inf)
    if not np.any(np.isfinite(ratios)):
        return 1
    return int(np.argmax(ratios)) + 1


def dp_lambda(
    eigs: np.ndarray,
    r: int,
    delta2: float,
    eps: float,
    delta: float,
    rng: np.random.Generator,
) -> float:
    """Noised average of the top-r sample eigenvalues.

    Returns the raw noised mean, which estimates lam + sigma2; subtracting a
    noise-variance estimate is left to the caller since sigma2 may itself be
    private.
    """
    eigs = np.asarray(eigs, dtype=float)
    if not 1 <= r <= eigs.shape[0]:
        raise ValueError(f"need 1 <= r <= {eigs.shape[0]}, got r={r}")
    sd = delta2 * math.sqrt(8.0 * math.log(2.5 / delta)) / eps
    top = eigs[:r] + (rng.normal(0.0, sd, size=r) if sd > 0 else 0.0)
    return float(top.mean())


@dataclass(frozen=True)
class DpEstimate:
    """Privatized outputs of the full pipeline with noise-level provenance."""

    u_tilde: np.ndarray
    lambda_tilde: np.ndarray
    sigma_tilde: np.ndarray
    sigma2_used: float
    noise_sd_projector: float
    noise_sd_eigs: float
    noise_sd_sigma2: float | None
    budget: PrivacyBudget
    sensitivities: sens.SensitivityBundle
    seed: int | None

    def __post_init__(self):
        recon = dp_covariance(self.u_tilde, self.lambda_tilde, self.sigma2_used)
        if np.abs(recon - self.sigma_tilde).max() > 1e-10 * max(
            1.0, float(np.abs(self.sigma_tilde).max())
        ):
            raise ValueError("sigma_tilde does not match its factored form")

    def stage_budgets(self) -> list[tuple[float, float]]:
        """Per-stage (epsilon_i, delta_i); sums to the declared total."""
        return [self.budget.stage_budget()] * self.budget.stages

    def to_dict(self) -> dict:
        return {
            "budget": {
                "epsilon": self.budget.epsilon,
                "delta": self.budget.delta,
                "split": self.budget.split,
            },
            "sensitivities": {
                "delta1": self.sensitivities.delta1,
                "delta2": self.sensitivities.delta2,
                "delta3": self.sensitivities.delta3,
                "constants": list(self.sensitivities.constants),
                "regime": self.sensitivities.regime,
            },
            "noise_sd": {
                "projector": self.noise_sd_projector,
                "eigenvalues": self.noise_sd_eigs,
                "sigma2": self.noise_sd_sigma2,
            },
            "sigma2_used": self.sigma2_used,
            "seed": self.seed,
            "p": int(self.u_tilde.shape[0]),
            "r": int(self.u_tilde.shape[1]),
            "u_tilde": self.u_tilde.flatten().tolist(),
            "lambda_tilde": self.lambda_tilde.flatten().tolist(),
            "sigma_tilde": self.sigma_tilde.flatten().tolist(),
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def from_dict(cls, doc: dict) -> "DpEstimate":
        p, r = doc["p"], doc["r"]
        s = doc["sensitivities"]
        return cls(
            u_tilde=np.asarray(doc["u_tilde"]).reshape(p, r),
            lambda_tilde=np.asarray(doc["lambda_tilde"]).reshape(r, r),
            sigma_tilde=np.asarray(doc["sigma_tilde"]).reshape(p, p),
            sigma2_used=doc["sigma2_used"],
            noise_sd_projector=doc["noise_sd"]["projector"],
            noise_sd_eigs=doc["noise_sd"]["eigenvalues"],
            noise_sd_sigma2=doc["noise_sd"]["sigma2"],
            budget=PrivacyBudget(**doc["budget"]),
            sensitivities=sens.SensitivityBundle(
                delta1=s["delta1"],
                delta2=s["delta2"],
                delta3=s["delta3"],
                constants=tuple(s["constants"]),
                regime=s["regime"],
            ),
            seed=doc["seed"],
        )

    @classmethod
    def load_json(cls, path) -> "DpEstimate":
        return cls.from_dict(json.loads(Path(path).read_text()))


def dp_estimate(
    x: DataMatrix,
    r: int,
    lam: float,
    sigma2: float | None,
    budget: PrivacyBudget,
    rng: np.random.Generator | int,
    constants: tuple[float, float, float] = (
        sens.DEFAULT_CONSTANT,
        sens.DEFAULT_CONSTANT,
        sens.DEFAULT_CONSTANT,
    ),
) -> DpEstimate:
    """Run the full private PCA and covariance pipeline on a data matrix.

    ``lam`` is the signal strength used to calibrate sensitivities.  Pass a
    known noise variance through ``sigma2`` with a two-way budget split, or
    ``sigma2=None`` for the private path: a three-way split where the
    noise variance is estimated first and the sensitivities are recalibrated
    with the private estimate.  In that path the sensitivity of the variance
    estimator is calibrated against the non-private bulk estimate, which the
    output records as part of its provenance.

    ``rng`` may be an integer seed (recorded in the estimate for replay) or
    a ready generator (seed recorded as None).
    """
    p, n = x.p, x.n
    if 2 * r > p:
        raise ValueError(f"rank r={r} must satisfy 2r <= p={p}")
    if lam <= 0:
        raise ValueError("lam must be positive")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    gen = np.random.default_rng(rng) if seed is not None else rng
    c1, c2, c3 = constants

    private_sigma2 = sigma2 is None
    expected_split = "thirds" if private_sigma2 else "halves"
    if budget.split != expected_split:
        raise ValueError(
            f"sigma2 mode requires split={expected_split!r}, got {budget.split!r}"
        )

    noise_sd_sigma2 = None
    if private_sigma2:
        eigs = np.sort(np.linalg.eigvalsh(x.sample_cov))[::-1]
        plugin = sigma2_hat(eigs, p, n)
        d3 = sens.delta3(lam, plugin, p, r, n, c=c3)
        noise_sd_sigma2 = d3 * math.sqrt(18.0 * math.log(3.75 / budget.delta)) / budget.epsilon
        sigma2_used = dp_sigma2(x, d3, budget.epsilon, budget.delta, gen)
    else:
        if sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        d3 = 0.0
        sigma2_used = float(sigma2)

    snr = lam / max(sigma2_used, 1e-300)
    gamma = p / n
    if snr < gamma + math.sqrt(gamma):
        warnings.warn(
            f"signal-to-noise ratio {snr:.3g} is below the p/n + sqrt(p/n) "
            f"threshold {gamma + math.sqrt(gamma):.3g}; estimates may be unreliable",
            RuntimeWarning,
            stacklevel=2,
        )

    d1 = sens.delta1(lam, sigma2_used, p, r, n, c=c1)
    d2 = sens.delta2(lam, sigma2_used, p, r, n, c=c2)
    bundle = sens.SensitivityBundle(
        delta1=d1, delta2=d2, delta3=d3, constants=(c1, c2, c3)
    )

    u_tilde = dp_pca(x, r, d1, budget, gen)
    lam_tilde = dp_eigenvalues(x, u_tilde, sigma2_used, d2, budget, gen)
    sigma_tilde = dp_covariance(u_tilde, lam_tilde, sigma2_used)

    return DpEstimate(
        u_tilde=u_tilde,
        lambda_tilde=lam_tilde,
        sigma_tilde=sigma_tilde,
        sigma2_used=sigma2_used,
        noise_sd_projector=stage_noise_sd(d1, budget),
        noise_sd_eigs=stage_noise_sd(d2, budget),
        noise_sd_sigma2=noise_sd_sigma2,
        budget=budget,
        sensitivities=bundle,
        seed=seed,
    )
