"""Main-effect audits of composite indicators."""

__version__ = "0.1.0"

from ._validation import CIAuditError, InputError, NumericalError
from .audit import (CompositeIndicatorAudit, discrepancy, discrepancy_bounds,
                    discrepancy_report, normalize_effects, select_reference)
from .bandwidth import build_grid, cv_criterion, dpi_bandwidth, select_cv, select_dpi
from .dataset import (DataMatrix, MinMaxNormalizer, NormalizedMatrix, Standardizer,
                      compute_index, gen_gaussian_dataset, load_csv,
                      minmax_normalize, standardize)
from .effects import (effective_weights, linearity_pvalue, main_effect,
                      main_effect_curve, main_effect_linear, population_main_effects)
from .inverse import forward_ratios, solve_inverse, solve_inverse_from_ratios
from .smoother import LocalLinearRegression, locallinear_fit, loo_fit

__all__ = [
    "CIAuditError", "InputError", "NumericalError",
    "CompositeIndicatorAudit", "discrepancy", "discrepancy_bounds",
    "discrepancy_report", "normalize_effects", "select_reference",
    "build_grid", "cv_criterion", "dpi_bandwidth", "select_cv", "select_dpi",
    "DataMatrix", "MinMaxNormalizer", "NormalizedMatrix", "Standardizer",
    "compute_index", "gen_gaussian_dataset", "load_csv", "minmax_normalize",
    "standardize", "effective_weights", "linearity_pvalue", "main_effect",
    "main_effect_curve", "main_effect_linear", "population_main_effects",
    "forward_ratios", "solve_inverse", "solve_inverse_from_ratios",
    "LocalLinearRegression", "locallinear_fit", "loo_fit",
]
