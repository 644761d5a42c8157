"""Two-sample testing of equal regression coefficients in high dimensions."""

__version__ = "0.1.0"

from .adds import AddsFit, DegenerateFitError, eta_adaptive, fit
from .dantzig import (DantzigProblem, DantzigSolution, SolverError, SolveStatus,
                      certify_optimality, solve_at_sigma)
from .model import (ConvolvedData, DimensionError, PopulationSpec, TwoSampleData,
                    convolve, population_pi, population_sigma_v)
from .procedure import (DegenerateStatisticError, PiEstimate, TestResult, TiersConfig,
                        Variant, estimate_pi, estimate_theta, estimate_theta_plus,
                        qhat, run_tiers, run_tiers_plus, simulate_max_quantile,
                        simulate_xi, test_statistic)

__all__ = [
    "AddsFit", "DegenerateFitError", "eta_adaptive", "fit",
    "DantzigProblem", "DantzigSolution", "SolverError", "SolveStatus",
    "certify_optimality", "solve_at_sigma",
    "ConvolvedData", "DimensionError", "PopulationSpec", "TwoSampleData",
    "convolve", "population_pi", "population_sigma_v",
    "DegenerateStatisticError", "PiEstimate", "TestResult", "TiersConfig", "Variant",
    "estimate_pi", "estimate_theta", "estimate_theta_plus", "qhat", "run_tiers",
    "run_tiers_plus", "simulate_max_quantile", "simulate_xi", "test_statistic",
]
