"""Tanh-sinh (double-exponential) quadrature for finite intervals with endpoint
singularities, with an a-priori O(h^2) global error bound."""
from ._backend import BACKEND
from .bounds import (BoundParams, DomainError, FitFailed, case1_term, case2_term,
                     estimate_c, f_second_derivative_envelope, global_bound,
                     h0_limit, k0_threshold)
from .engine import (Integrand, NoConvergence, NonFiniteIntegrand, QuadratureResult,
                     TruncationOverrun, choose_truncation, integrate,
                     refine_reuse_check, trapezoid_sum)
from .expr import ParseError, UnknownFunction, evaluate, parse
from .transform import Interval, TransformNode, map_affine, node, phi, phi_prime

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundParams", "DomainError", "FitFailed", "Integrand", "Interval",
    "NoConvergence", "NonFiniteIntegrand", "ParseError", "QuadratureResult",
    "TransformNode", "TruncationOverrun", "UnknownFunction", "case1_term",
    "case2_term", "choose_truncation", "estimate_c", "evaluate",
    "f_second_derivative_envelope", "global_bound", "h0_limit", "integrate",
    "k0_threshold", "map_affine", "node", "parse", "phi", "phi_prime",
    "refine_reuse_check", "trapezoid_sum",
]
