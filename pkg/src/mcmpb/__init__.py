"""The modified Conway-Maxwell-Poisson type binomial (MCMPB) distribution."""

from .core import (
    McmpbParams,
    MomentSet,
    ParameterError,
    ProbTable,
    SupportError,
    build_table,
    classify_modality,
    exp_family_derivatives,
    log_concavity_check,
    log_pmf,
    moments,
    power_bias,
    reflect,
    sample,
    stein_residual,
)
from .inference import FitReport, FrequencyData, fit_fixed_n, fit_profile_n, log_likelihood

__all__ = [
    "FitReport",
    "FrequencyData",
    "McmpbParams",
    "MomentSet",
    "ParameterError",
    "ProbTable",
    "SupportError",
    "build_table",
    "classify_modality",
    "exp_family_derivatives",
    "fit_fixed_n",
    "fit_profile_n",
    "log_concavity_check",
    "log_likelihood",
    "log_pmf",
    "moments",
    "power_bias",
    "reflect",
    "sample",
    "stein_residual",
]
