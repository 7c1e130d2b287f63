"""Finite-scale numerics for quasi-periodic Jacobi cocycles."""

from .avalanche import ap_estimate_log_norm, ap_verify, multiscale_combination
from .cocycle import (
    GOLDEN,
    CocycleSpec,
    FourierSeries,
    LogScaledMat2,
    almost_mathieu,
    constant_cocycle,
    det_identity_residual,
    normalized_log_norm,
    transfer_product_m,
    transfer_product_mtilde,
    transfer_product_t,
)
from .config import RunConfig, load_config, parse_config
from .diophantine import continued_fraction, diophantine_margin
from .ldt import deviation_histogram, fit_deviation_rate, uniform_upper_bound_check
from .lyapunov import accelerated_limit, finite_scale_l, holder_fit, mean_log_b
from .sampling import PhaseSampler

__version__ = "0.1.0"

__all__ = [
    "GOLDEN",
    "CocycleSpec",
    "FourierSeries",
    "LogScaledMat2",
    "PhaseSampler",
    "RunConfig",
    "accelerated_limit",
    "almost_mathieu",
    "ap_estimate_log_norm",
    "ap_verify",
    "constant_cocycle",
    "continued_fraction",
    "det_identity_residual",
    "deviation_histogram",
    "diophantine_margin",
    "finite_scale_l",
    "fit_deviation_rate",
    "holder_fit",
    "load_config",
    "mean_log_b",
    "multiscale_combination",
    "normalized_log_norm",
    "parse_config",
    "transfer_product_m",
    "transfer_product_mtilde",
    "transfer_product_t",
    "uniform_upper_bound_check",
]
