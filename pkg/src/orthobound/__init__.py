"""Certified bounds on the stability number of the orthogonality graph Omega(n)."""

__version__ = "0.1.0"

from .scheme import HammingScheme, binomial, build_scheme, double_factorial, krawtchouk, omega_spectrum
from .classical import (
    chromatic_lower_bound,
    corollary_identity_check,
    delsarte_lp,
    integer_refinement,
    lower_bound_set,
    lower_bound_size,
    prop1_witness,
    ratio_bound,
)
from .terwilliger import build_laurent_sdp, build_schrijver_sdp
from .solver import SolverConfig, Solution, solve

__all__ = [
    "HammingScheme", "binomial", "build_scheme", "double_factorial", "krawtchouk",
    "omega_spectrum", "chromatic_lower_bound", "corollary_identity_check", "delsarte_lp",
    "integer_refinement", "lower_bound_set", "lower_bound_size", "prop1_witness",
    "ratio_bound", "build_laurent_sdp", "build_schrijver_sdp", "SolverConfig", "Solution",
    "solve",
]
