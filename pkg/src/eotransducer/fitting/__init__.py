"""Nonlinear least squares and the model bindings built on it."""
from .lm import FitResult, ModelSpec, least_squares_fit
from .models import (
    ConversionFit,
    ExponentialFit,
    FitError,
    MicrowaveReflectionFit,
    NoiseFit,
    OpticalReflectionFit,
    OpticalSweepFit,
    PowerLawFit,
    RadiometerFit,
    fit_conversion_spectrum,
    fit_exponential_offset,
    fit_microwave_reflection,
    fit_noise_spectrum,
    fit_optical_coupling_sweep,
    fit_optical_reflection,
    fit_power_law,
    fit_radiometer,
    lambda_sq_from_depth,
)
