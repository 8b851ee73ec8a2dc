"""Copula-based fusion of censored sensor data for distributed detection.

The package models a parallel network of censoring sensors reporting to a
fusion center: sensors stay silent when their observation falls inside a
no-send interval, optionally quantize what they do send, and the fusion
center combines the received values, the silence pattern and its own
observation through copula-based generalized likelihood ratio tests or
their noise-aided approximations.
"""

__version__ = "0.1.0"

from .censoring import (
    CENSORED,
    CensoringScheme,
    SensorMessage,
    apply_censoring,
    rho,
    scheme_from_rate,
    solve_upper_limit,
)
from .copulas import (
    CopulaFamily,
    CopulaModel,
    copula_cdf,
    copula_density,
    copula_sample,
    fit_ml,
    h_volume,
    param_to_tau,
    select_best,
    tau_to_param,
)
from .errors import (
    CalibrationError,
    CensorfuseError,
    ConfigError,
    DomainError,
    FitError,
    IntegrationError,
    NumericalError,
    ParameterError,
    ResolutionError,
)
from .fusion import (
    FusionSample,
    FusionWindow,
    GlrtResult,
    NoiseAidedSample,
    NoiseAidedWindow,
    QUANTIZED_CENSORED,
    QuantizedMessage,
    Sensor,
    glrt_analog,
    glrt_noise_analog,
    glrt_noise_quantized,
    glrt_quantized,
    independence_statistic,
    likelihood_analog,
    likelihood_quantized,
    substitute_analog_noise,
    substitute_quantized_noise,
)
from .marginals import H0, H1, GaussianMarginal
from .quantization import NoiseKind, NoiseSpec, QuantizerSpec, design_quantizer, quantize

__all__ = [
    "CENSORED",
    "CalibrationError",
    "CensorfuseError",
    "CensoringScheme",
    "ConfigError",
    "CopulaFamily",
    "CopulaModel",
    "DomainError",
    "FitError",
    "FusionSample",
    "FusionWindow",
    "GaussianMarginal",
    "GlrtResult",
    "H0",
    "H1",
    "IntegrationError",
    "NoiseAidedSample",
    "NoiseAidedWindow",
    "NoiseKind",
    "NoiseSpec",
    "NumericalError",
    "ParameterError",
    "QUANTIZED_CENSORED",
    "QuantizedMessage",
    "QuantizerSpec",
    "ResolutionError",
    "Sensor",
    "SensorMessage",
    "apply_censoring",
    "copula_cdf",
    "copula_density",
    "copula_sample",
    "design_quantizer",
    "fit_ml",
    "glrt_analog",
    "glrt_noise_analog",
    "glrt_noise_quantized",
    "glrt_quantized",
    "h_volume",
    "independence_statistic",
    "likelihood_analog",
    "likelihood_quantized",
    "param_to_tau",
    "quantize",
    "rho",
    "scheme_from_rate",
    "select_best",
    "solve_upper_limit",
    "substitute_analog_noise",
    "substitute_quantized_noise",
    "tau_to_param",
    "__version__",
]
