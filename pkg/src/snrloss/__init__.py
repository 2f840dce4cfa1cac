"""Distribution of the adaptive-filter SNR loss under covariance mismatch.

The package computes, approximates and Monte-Carlo-validates the
distribution of the SNR loss of a filter trained on samples whose
covariance differs from the operating covariance: exact closed forms where
they exist, generalized-eigenrelation moment fits, and a three-cumulant
scaled-F fit for arbitrary mismatch.
"""

from .approximation import (
    LossDistribution,
    PearsonFit,
    PearsonLossDistribution,
    ScaledChi2Fit,
    ScaledFFit,
    assemble_loss,
    assemble_pearson_loss,
    exact_surprise_distribution,
    loss_cdf,
    loss_mean,
    loss_pdf,
    loss_quantile,
    pearson_three_moment,
    scaled_chi2_two_moment,
    scaled_f_cumulants,
    scaled_f_fit,
)
from .errors import SnrLossError
from .mismatch import (
    CumulantTriple,
    OmegaDecomposition,
    QuadraticFormSpec,
    build_omega,
    c_coefficients,
    cumulants_q,
    ger_cs,
    to_quadratic_form,
)
from .montecarlo import (
    EmpiricalSummary,
    SampleSet,
    empirical_summary,
    ks_statistic,
    pair_digest,
    simulate_loss_direct,
    simulate_loss_representation,
    two_sample_ks,
)
from .sampling import (
    RngStream,
    WishartSpec,
    make_streams,
    sample_chi2,
    sample_complex_gaussian_matrix,
    sample_noncentral_chi2,
    sample_wishart,
)
from .scenarios import (
    ArrayScenario,
    ScenarioPair,
    eigenvalue_mismatch,
    ger_blockdiag_mismatch,
    interference_covariance,
    inverse_wishart_mismatch,
    mpdr_mismatch,
    no_mismatch,
    random_ger_blockdiag_mismatch,
    steering_vector,
    surprise_interference,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
