"""Differentially private PCA and spiked covariance estimation toolkit."""

from .baselines import BaselineConfig, BaselineResult, dp_gauss, dp_gauss_star, dp_oja
from .harness import (
    ExperimentConfig,
    ResultRow,
    SummaryRow,
    preset_config,
    run_experiment,
    summarize,
    theoretical_rate,
)
from .linalg import (
    EigenSolverError,
    SpectralDecomposition,
    eig_sym,
    projection_distance,
    random_orthonormal,
    schatten_norm,
    symmetrize,
    top_r,
)
from .mechanisms import (
    DpEstimate,
    PrivacyBudget,
    dp_covariance,
    dp_eigenvalues,
    dp_estimate,
    dp_lambda,
    dp_pca,
    dp_rank,
    dp_sigma2,
    gaussian_mechanism_matrix,
    psd_project,
)
from .model import (
    DataMatrix,
    SpikedModel,
    covariance_of,
    neighbor,
    sample,
    snr_diagnostics,
)
from .mp import MpParams, bulk_quantiles, mp_pdf, mp_upper_quantile, mp_upper_tail, sigma2_hat
from .sensitivity import (
    SensitivityBundle,
    delta1,
    delta1_diverging_kappa,
    delta2,
    delta3,
    empirical_eigenvalue_sensitivity,
    empirical_projector_sensitivity,
)

__version__ = "0.1.0"
