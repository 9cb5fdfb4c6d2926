"""Travelling-wave speed and profile solver for the p-Laplacian bistable equation

    (d(U) |U'|^(p-2) U')' + c U' - f(U) = 0,   U(-inf) = 1, U(+inf) = -1.
"""

from .errors import (
    ExponentUnavailable,
    HypothesisViolation,
    PoorFit,
    SolverError,
    TravelWaveError,
)
from .families import alpha_bistable, cubic, double_well, tabulated, user_exponents
from .problem import AsymptoticExponents, ProblemSpec, build_problem, estimate_exponents
from .reconstruct import Interface, WaveProfile, classify_interfaces, evaluate, reconstruct
from .shooter import OutcomeKind, Trajectory, shoot, terminal_value
from .speed import Branch, CStarResult, bracket, solve_cstar

__all__ = [
    "AsymptoticExponents", "Branch", "CStarResult", "ExponentUnavailable", "HypothesisViolation",
    "Interface", "OutcomeKind", "PoorFit", "ProblemSpec", "SolverError", "Trajectory",
    "TravelWaveError", "WaveProfile", "alpha_bistable", "bracket", "build_problem",
    "classify_interfaces", "cubic", "double_well", "estimate_exponents", "evaluate",
    "reconstruct", "shoot", "solve_cstar", "tabulated", "terminal_value", "user_exponents",
]
