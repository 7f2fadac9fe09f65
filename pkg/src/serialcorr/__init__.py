"""Residual serial-correlation testing for AR(p) models with AR(q) noise."""
from .covariance import CovarianceStructure, yule_walker
from .errors import (
    DegenerateModelError,
    DegenerateSampleError,
    InvalidInputError,
    NonCausalError,
    PathologicalModelError,
    SerialCorrError,
    SingularDesignError,
)
from .estimation import FitConfig, FitResult, fit, run_test
from .hypothesis_tests import TestReport, box_pierce, breusch_godfrey, chi2_cdf, chi2_quantile, ljung_box
from .limits import LimitTheory, compute_limits
from .montecarlo import ExperimentReport, ExperimentSpec, run_experiment
from .process import ArArModel, NoiseLaw, SimulatedPath, check_causal, compose_beta, simulate

__all__ = [
    "ArArModel", "CovarianceStructure", "DegenerateModelError", "DegenerateSampleError",
    "ExperimentReport", "ExperimentSpec", "FitConfig", "FitResult", "InvalidInputError",
    "LimitTheory", "NoiseLaw", "NonCausalError", "PathologicalModelError", "SerialCorrError",
    "SimulatedPath", "SingularDesignError", "TestReport", "box_pierce", "breusch_godfrey",
    "check_causal", "chi2_cdf", "chi2_quantile", "compose_beta", "compute_limits", "fit",
    "ljung_box", "run_experiment", "run_test", "simulate", "yule_walker",
]
