from .base import SegmentModel
from .gaussian import (
    SYNTHETIC_PRIOR,
    WELL_LOG_PRIOR,
    GaussianParams,
    GaussianSegmentModel,
    PriorSpec,
    gaussian_log_density,
    log_prior,
    log_prior_grad,
)
from .series_io import load_series, load_weights, save_series
from .synthetic import (
    PRESETS,
    RQ1_VARYING_M,
    RQ1_VARYING_N,
    RQ2_SYNTHETIC,
    WELL_LOG_LIKE,
    CounterRNG,
    GeneratorSpec,
    generate_synthetic,
    load_generator_spec,
)

__all__ = [
    "PRESETS",
    "RQ1_VARYING_M",
    "RQ1_VARYING_N",
    "RQ2_SYNTHETIC",
    "SYNTHETIC_PRIOR",
    "WELL_LOG_LIKE",
    "WELL_LOG_PRIOR",
    "CounterRNG",
    "GaussianParams",
    "GaussianSegmentModel",
    "GeneratorSpec",
    "PriorSpec",
    "SegmentModel",
    "gaussian_log_density",
    "generate_synthetic",
    "load_generator_spec",
    "load_series",
    "load_weights",
    "log_prior",
    "log_prior_grad",
    "save_series",
]
