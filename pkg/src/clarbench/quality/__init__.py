"""Censored-Beta clarification quality model and its special functions."""

from .model import (
    BetaParams,
    FitConfig,
    FitResult,
    LikelihoodForm,
    Observation,
    QualityDataset,
    ThresholdVector,
    beta_mean,
    fit_mle,
    generate_events,
    log_likelihood,
)
from .special import (
    beta_inverse_cdf,
    log_beta,
    log_beta_pdf,
    reg_inc_beta,
    reg_inc_beta_quadrature,
)

__all__ = [
    "BetaParams",
    "FitConfig",
    "FitResult",
    "LikelihoodForm",
    "Observation",
    "QualityDataset",
    "ThresholdVector",
    "beta_inverse_cdf",
    "beta_mean",
    "fit_mle",
    "generate_events",
    "log_beta",
    "log_beta_pdf",
    "log_likelihood",
    "reg_inc_beta",
    "reg_inc_beta_quadrature",
]
