"""Clustering comparison: within-cluster pair sampling, the pairwise judge
protocol, and significance tests."""

from .judge import JudgeTally, judge_pairs, tally_significance
from .sampling import (
    NOISE_CLUSTER_IDS,
    ClusterAssignment,
    ClusterRow,
    SampledPair,
    sample_pairs,
)
from .stats import (
    BinomialResult,
    Chi2Result,
    SignificanceReport,
    binomial_test,
    chi2_sf,
    chi_square_uniform,
    reg_upper_gamma,
    significance_tests,
)

__all__ = [
    "BinomialResult",
    "Chi2Result",
    "ClusterAssignment",
    "ClusterRow",
    "JudgeTally",
    "NOISE_CLUSTER_IDS",
    "SampledPair",
    "SignificanceReport",
    "binomial_test",
    "chi2_sf",
    "chi_square_uniform",
    "judge_pairs",
    "reg_upper_gamma",
    "sample_pairs",
    "significance_tests",
    "tally_significance",
]
