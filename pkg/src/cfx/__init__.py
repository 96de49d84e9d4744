"""Small-tenor expansions of conditional characteristic functions.

Models are deep Ito semimartingales with price and volatility jumps driven
by a thinned jump measure.  The package provides the expansion formulas for
the conditional CF of normalized increments, an option-spanning route that
recovers the CF from OTM option curves, spot-variance estimators with a
two-maturity debiasing combination, a Monte Carlo engine, and an experiment
harness that verifies the claimed asymptotic orders.
"""

__version__ = "0.1.0"

from .errors import (CfxError, ConfigError, DegenerateCF, DegenerateVariance,
                     DomainError, GridError, InsufficientPoints, InvalidSpec,
                     OutOfRange, QuadratureFail, TailNotDecayed,
                     UnstableScheme)
from .model import (Carrier, DoubleExponential, JumpSystem, MarkMeasure,
                    Model, ModelSpec, ModelState, PointMass, SecondLayer,
                    TemperedStable, assumption_report, build_model,
                    frozen_state)
from .jumpcalc import chi, integrate, phi, psi_terms, xi
from .expansion import (Freq, HFGrid, IncrementDecomposition, ExpansionReport,
                        bias_terms_phi_psi, canonical_transform,
                        cf_first_order, eta_correction,
                        increment_cf_expansion, increment_transform_expansion,
                        increment_variance_expansion, lambda_expansion,
                        theta_factor)
from .estimators import (VarianceEstimate, debias_pair, debiased_estimate,
                         estimator_increments, spot_var, spot_var_debiased,
                         transform_debiased, transform_estimate)
from .mcsim import (CFGrid, Path, conditional_cf_mc, increment_cf_mc,
                    simulate_path, terminal_increments)
from .spanning import (OptionCurve, bs_option_curve, mc_option_curve, span_cf,
                       strike_grid_design)
from .harness import (ExperimentConfig, SlopeFit, fit_order, levy_exact_cf,
                      levy_exact_increment, load_config, model_from_dict)
from . import harness

__all__ = [
    "__version__",
    # errors
    "CfxError", "ConfigError", "DegenerateCF", "DegenerateVariance",
    "DomainError", "GridError", "InsufficientPoints", "InvalidSpec",
    "OutOfRange", "QuadratureFail", "TailNotDecayed", "UnstableScheme",
    # model
    "Carrier", "DoubleExponential", "JumpSystem", "MarkMeasure", "Model",
    "ModelSpec", "ModelState", "PointMass", "SecondLayer", "TemperedStable",
    "assumption_report", "build_model", "frozen_state",
    # jump calculus
    "chi", "integrate", "phi", "psi_terms", "xi",
    # expansions
    "Freq", "HFGrid", "IncrementDecomposition", "ExpansionReport",
    "bias_terms_phi_psi", "canonical_transform", "cf_first_order",
    "eta_correction", "increment_cf_expansion",
    "increment_transform_expansion", "increment_variance_expansion",
    "lambda_expansion", "theta_factor",
    # estimators
    "VarianceEstimate", "debias_pair", "debiased_estimate",
    "estimator_increments", "spot_var", "spot_var_debiased",
    "transform_debiased", "transform_estimate",
    # monte carlo
    "CFGrid", "Path", "conditional_cf_mc", "increment_cf_mc",
    "simulate_path", "terminal_increments",
    # spanning
    "OptionCurve", "bs_option_curve", "mc_option_curve", "span_cf",
    "strike_grid_design",
    # harness
    "ExperimentConfig", "SlopeFit", "fit_order", "levy_exact_cf",
    "levy_exact_increment", "load_config", "model_from_dict", "harness",
]
