"""Literature baselines: DP-Oja, DP-Gauss and DP-Gauss*.

DP-Gauss scales the sample covariance so the worst-case sensitivity of a
unit-norm-bounded dataset applies, adds symmetric Gaussian noise at that
worst-case level, takes a rank-r eigenspace and rescales.  DP-Gauss* is the
same with a data-dependent scale max_i ||X_i||^2; its privacy guarantee is
heuristic and the run report says so.

DP-Oja is the streaming noisy power iteration for the leading component
only.  Its per-step noise schedule here: budget divided over the n steps by
strong composition (eps_step = eps / (2 sqrt(2 n ln(2/delta))), delta_step =
delta / (2n)), per-step sensitivity bounded by the concentration bound of
max_i ||X_i X_i^T u|| scaled by the configurable constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import symmetrize
from .mechanisms import PrivacyBudget, gaussian_noise_sd
from .model import DataMatrix

__all__ = ["BaselineConfig", "BaselineResult", "dp_gauss", "dp_gauss_star", "dp_oja"]


@dataclass(frozen=True)
class BaselineConfig:
    """Hyperparameters for the comparison methods."""

    budget: PrivacyBudget
    oja_stepsize: float | None = None  # default 0.5/n at run time
    oja_constant: float = 0.2
    gauss_scaling_constant: float = 4.0

    def __post_init__(self):
        if self.oja_stepsize is not None and self.oja_stepsize <= 0:
            raise ValueError("oja_stepsize must be positive")
        if self.oja_constant <= 0 or self.gauss_scaling_constant <= 0:
            raise ValueError("constants must be positive")


@dataclass(frozen=True)
class BaselineResult:
    """Subspace estimate with optional covariance reconstruction and noise report."""

    method: str
    u_tilde: np.ndarray
    sigma_tilde: np.ndarray | None
    noise_sd: float
    scale: float | None = None
    scale_violations: int | None = None
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "noise_sd": self.noise_sd,
            "scale": self.scale,
            "scale_violations": self.scale_violations,
            "notes": list(self.notes),
            "p": int(self.u_tilde.shape[0]),
            "r": int(self.u_tilde.shape[1]),
            "u_tilde": self.u_tilde.flatten().tolist(),
            "sigma_tilde": None
            if self.sigma_tilde is None
            else self.sigma_tilde.flatten().tolist(),
        }


def _gauss_core(
    x: DataMatrix,
    r: int,
    scale: float,
    config: BaselineConfig,
    rng: np.random.Generator,
    method: str,
    notes: tuple[str, ...],
) -> BaselineResult:
    budget = config.budget
    scaled_cov = x.sample_cov / scale
    # two rank-one terms of Frobenius norm <= 1/n each after unit-norm scaling
    omega = 2.0 / x.n
    sd = gaussian_noise_sd(omega, budget.epsilon, budget.delta)
    noised = scaled_cov
    if sd > 0:
        z = np.zeros((x.p, x.p))
        rows, cols = np.triu_indices(x.p)
        z[rows, cols] = rng.normal(0.0, sd, size=rows.shape[0])
        z[cols, rows] = z[rows, cols]
        noised = scaled_cov + z
    noised = symmetrize(noised)
    w, v = np.linalg.eigh(noised)
    order = np.argsort(w)[::-1][:r]
    u = v[:, order]
    topvals = w[order]
    sigma_r = symmetrize(scale * (u * topvals) @ u.T)
    violations = int(np.sum((x.columns**2).sum(axis=0) > scale))
    return BaselineResult(
        method=method,
        u_tilde=u,
        sigma_tilde=sigma_r,
        noise_sd=sd,
        scale=scale,
        scale_violations=violations,
        notes=notes,
    )


def dp_gauss(
    x: DataMatrix,
    r: int,
    sigma2: float,
    lam: float,
    config: BaselineConfig,
    rng: np.random.Generator,
) -> BaselineResult:
    """Worst-case Gaussian mechanism with the theoretical scaling factor.

    The sample covariance is divided by s = (r + C5 ln n) lam + p sigma2 so
    samples are unit-norm bounded with high probability; samples whose norm
    exceeds the scale are counted in the report rather than truncated.
    """
    scale = (r + config.gauss_scaling_constant * math.log(x.n)) * lam + x.p * sigma2
    return _gauss_core(x, r, scale, config, rng, "dp_gauss", notes=())


def dp_gauss_star(
    x: DataMatrix,
    r: int,
    config: BaselineConfig,
    rng: np.random.Generator,
) -> BaselineResult:
    """DP-Gauss with the realized scale max_i ||X_i||^2.

    The scale is data-dependent, so the resulting privacy guarantee is
    heuristic; the report carries that caveat.
    """
    scale = float((x.columns**2).sum(axis=0).max())
    return _gauss_core(
        x,
        r,
        scale,
        config,
        rng,
        "dp_gauss_star",
        notes=("data-dependent scaling factor; privacy guarantee is heuristic",),
    )


def oja_step_noise_sd(
    n: int, p: int, sigma2: float, lam: float, config: BaselineConfig
) -> float:
    """Per-step noise level of DP-Oja under the documented schedule."""
    budget = config.budget
    eps_step = budget.epsilon / (2.0 * math.sqrt(2.0 * n * math.log(2.0 / budget.delta)))
    delta_step = budget.delta / (2.0 * n)
    # concentration bound of max_i ||X_i X_i^T u||, scaled by the constant
    gamma = (1 + 4.0 * math.log(n)) * lam + p * sigma2
    return gaussian_noise_sd(config.oja_constant * gamma, eps_step, delta_step)


def dp_oja(
    x: DataMatrix,
    sigma2: float,
    lam: float,
    config: BaselineConfig,
    rng: np.random.Generator,
) -> BaselineResult:
    """Streaming noisy Oja iteration for the leading principal component.

    Rank-one only.  Random unit initialization, one pass over the columns,
    normalization after every update; the output has exactly unit norm.
    """
    p, n = x.p, x.n
    eta = config.oja_stepsize if config.oja_stepsize is not None else 0.5 / n
    sd = oja_step_noise_sd(n, p, sigma2, lam, config)
    u = rng.standard_normal(p)
    u /= np.linalg.norm(u)
    cols = x.columns
    for i in range(n):
        xi = cols[:, i]
        g = rng.normal(0.0, sd, size=p) if sd > 0 else 0.0
        u = u + eta * (xi * (xi @ u) + g)
        u /= np.linalg.norm(u)
    return BaselineResult(
        method="dp_oja",
        u_tilde=u.reshape(-1, 1),
        sigma_tilde=None,
        noise_sd=sd,
        notes=(f"stepsize={eta!r}", f"per-step noise sd={sd!r}"),
    )
