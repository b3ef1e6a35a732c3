"""Simulation-calibrated max-type tests for high-dimensional mean vectors."""

from .engine import TestResult, TestSpec, critical_value_for_mask, run_one_sample, run_tests, run_two_sample
from .errors import DegenerateVarianceError, InvalidInputError
from .io import BatchReport, GeneSetDef, emit_report, load_matrix, load_scenarios, load_sets, run_batch
from .matrix import (
    DataMatrix,
    PsdFactor,
    correlation_from_covariance,
    pooled_covariance,
    psd_factorize,
    sample_covariance,
    sample_mean,
)
from .montecarlo import MonteCarloQuantileEstimate, RngSpec, draw_max_norms, empirical_pvalue, quantile
from .multiplicity import BatchDecision, benjamini_hochberg, bonferroni
from .screening import ScreenResult, lambda_threshold, screen, screening_threshold
from .simulation import CovModel, SignalSpec, SimReport, SimScenario, run_scenario
from .statistics import MarginalStats, max_statistic, one_sample_stats, two_sample_stats

__version__ = "0.1.0"
