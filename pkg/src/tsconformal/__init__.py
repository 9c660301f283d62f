"""Conformal prediction for time series with memory-L scores, dependence coefficients and coverage bounds."""

from .bounds import (
    BoundResult,
    cor1_lower,
    cor2_split_lower,
    thm1_lower,
    thm2_ceiling,
    thm3_upper,
    thm4_split_lower,
)
from .conformal import PredictionRule, calibrate_pretrained, calibrate_split, evaluate_coverage, interval_from_rule
from .dependence import (
    CoefficientTable,
    beta_mixing,
    delete,
    delete_split,
    psi_bar,
    psi_k_tau,
    pushforward_distribution,
    tv_distance,
)
from .processes import (
    CyclicMixtureSpec,
    DataPoint,
    FiniteDistribution,
    FiniteMarkovSpec,
    MAProcessSpec,
    TimeSeries,
    joint_pmf,
)
from .quantile import conformal_level, quantile
from .scoring import LeastSquaresAR, ScoreFunction, rank_score, residual_score_pretrained

__version__ = "0.1.0"
