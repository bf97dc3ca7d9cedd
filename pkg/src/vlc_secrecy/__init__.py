"""Secrecy outage probability and average secrecy capacity bounds for an
amplitude-constrained VLC downlink with Poisson-distributed eavesdroppers."""

from .errors import ConfigError, DegenerateRegion, DomainError, InvalidParameter, NonConvergent, VlcSecrecyError
from .monte_carlo import McConfig, McEstimate, estimate_asc, estimate_sop, simulate
from .secrecy_analytics import (
    AnalyticResult,
    BoundCoefficients,
    Method,
    asc,
    asc_given_k,
    asc_quad,
    bound_coefficients,
    sop,
    sop_given_k,
    sop_quad,
)
from .special_functions import QuadratureResult, adaptive_quad, gauss_2f1, lerch_phi, lp
from .vlc_model import BoundKind, SnrLaw, SystemParams, channel_gain, lambertian_order, snr_law

__version__ = "0.1.0"

__all__ = [
    "AnalyticResult", "BoundCoefficients", "BoundKind", "ConfigError", "DegenerateRegion", "DomainError",
    "InvalidParameter", "McConfig", "McEstimate", "Method", "NonConvergent", "QuadratureResult",
    "SnrLaw", "SystemParams", "VlcSecrecyError", "adaptive_quad", "asc", "asc_given_k", "asc_quad",
    "bound_coefficients", "channel_gain", "estimate_asc", "estimate_sop", "gauss_2f1", "lambertian_order",
    "lerch_phi", "lp", "simulate", "snr_law", "sop", "sop_given_k", "sop_quad",
]
