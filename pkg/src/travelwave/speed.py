"""Wave speed c* = inf{c : y_c(1) > 0} by geometric bracketing and bisection."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BracketExhausted, NegativeG1, NonConvergent
from .problem import ProblemSpec, chebyshev_lobatto, panel_integrals, potential_G
from .shooter import (
    OutcomeKind,
    ShotOutcome,
    Trajectory,
    default_boundary_tol,
    shoot,
)

log = logging.getLogger(__name__)

MAX_BISECTIONS = 200
MAX_DESCENT = 60
STATIONARY_REL_TOL = 1e-12
BORDERLINE_FACTOR = 1e3
PROFILE_H_MAX = 1e-3  # finer nodes for the reported profile: its dense output feeds the reconstruction


class Branch(str, enum.Enum):
    TRAVELLING_WAVE = "TravellingWave"
    STATIONARY = "Stationary"


@dataclass(frozen=True)
class BracketStep:
    c_lo: float
    c_hi: float
    outcome: OutcomeKind  # outcome of the shot that produced this bracket
    phase: str = "bisect"  # "descent" while searching for c_lo

    def as_tuple(self):
        return (self.c_lo, self.c_hi, self.outcome.value)


@dataclass(frozen=True)
class CStarResult:
    c_star: float
    bracket_history: list = field(repr=False)
    profile: Trajectory = field(repr=False)
    terminal_residual: float
    branch: Branch
    iterations: int
    a_priori_cap: float

    def summary(self) -> dict:
        return {
            "c_star": self.c_star,
            "branch": self.branch.value,
            "terminal_residual": self.terminal_residual,
            "iterations": self.iterations,
            "a_priori_cap": self.a_priori_cap,
        }


def stationary_tol(spec: ProblemSpec) -> float:
    return STATIONARY_REL_TOL * max(1.0, spec.sup_abs_g)


def classify_branch(spec: ProblemSpec, tol: float | None = None) -> Branch:
    """Stationary when |G(1)| <= tol, TravellingWave when G(1) > tol."""
    if tol is None:
        tol = stationary_tol(spec)
    G1 = spec.G1
    if G1 < -tol:
        raise NegativeG1(f"G(1) = {G1:.6g} < 0; no admissible wave")
    if abs(G1) <= tol:
        return Branch.STATIONARY
    if G1 <= BORDERLINE_FACTOR * tol:
        log.warning("G(1) = %.3g is barely positive; expect a tiny |c*|", G1)
    return Branch.TRAVELLING_WAVE


def a_priori_cap(spec: ProblemSpec, tol_quad: float = 1e-13) -> float:
    """(p' G(s0))^(1/p') / (1 - s0), an upper bound on |c*| used as a safety cap."""
    y0_s0 = spec.p_conj * potential_G(spec, spec.s0, tol=tol_quad)
    return y0_s0 ** (1.0 / spec.p_conj) / (1.0 - spec.s0)


def _crossed(spec: ProblemSpec, c: float, tol: float) -> tuple[bool, Trajectory]:
    traj = shoot(spec, c, tol, boundary_tol=0.0)
    return traj.outcome.crossed, traj


def bracket(spec: ProblemSpec, tol: float = 1e-10, *, history: list | None = None,
            cap: float | None = None):
    """Return (c_lo, c_hi) with an undershoot at c_lo and c_hi = 0.

    Descends c = -1, -2, -4, ...; raises BracketExhausted when a trial beyond
    the a-priori cap still does not undershoot.
    """
    if classify_branch(spec) is not Branch.TRAVELLING_WAVE:
        raise ValueError("bracket requires a travelling-wave problem (G(1) > 0)")
    if cap is None:
        cap = a_priori_cap(spec)
    c_hi = 0.0
    c = -1.0
    for _ in range(MAX_DESCENT):
        crossed, traj = _crossed(spec, c, tol)
        if history is not None:
            history.append(BracketStep(c, c_hi, traj.outcome.kind, "descent"))
        if crossed:
            return c, 0.0
        if -c > cap:
            raise BracketExhausted(
                f"no undershoot at c = {c:g}, beyond the a-priori cap {cap:.6g}"
            )
        c *= 2.0
    raise BracketExhausted("geometric descent did not terminate")


def solve_cstar(spec: ProblemSpec, tol_c: float = 1e-10, tol_ode: float = 1e-10,
                tol_quad: float = 1e-13) -> CStarResult:
    """Compute c* and the boundary-value profile y_{c*}.

    The reported speed is the upper (non-crossing) end of the final bracket;
    its trajectory is re-shot at tol_ode / 10 with steps of at most PROFILE_H_MAX.
    """
    branch = classify_branch(spec)
    cap = a_priori_cap(spec, tol_quad)
    if branch is Branch.STATIONARY:
        profile = stationary_profile(spec)
        return CStarResult(0.0, [], profile, 0.0, branch, 0, cap)

    history: list = []
    c_lo, c_hi = bracket(spec, tol_ode, history=history, cap=cap)
    hi_traj = None
    iterations = 0
    while c_hi - c_lo >= tol_c:
        iterations += 1
        if iterations > MAX_BISECTIONS:
            raise NonConvergent(f"bisection exceeded {MAX_BISECTIONS} iterations")
        mid = 0.5 * (c_lo + c_hi)
        if not (c_lo < mid < c_hi):
            break
        crossed, traj = _crossed(spec, mid, tol_ode)
        if crossed:
            c_lo = mid
        else:
            c_hi = mid
            hi_traj = traj
        history.append(BracketStep(c_lo, c_hi, traj.outcome.kind))

    if hi_traj is None:
        _, hi_traj = _crossed(spec, c_hi, tol_ode)
    fine = shoot(spec, c_hi, tol_ode / 10.0, h_max=PROFILE_H_MAX)
    profile = hi_traj if fine.outcome.crossed else fine
    btol = default_boundary_tol(tol_ode)
    residual = abs(profile.terminal)
    if residual > btol:
        raise NonConvergent(
            f"terminal residual {residual:.3g} exceeds {btol:.3g} at c = {c_hi:.15g}"
        )
    if profile.outcome.kind is not OutcomeKind.CONVERGED:
        profile = _relabel(profile, OutcomeKind.CONVERGED)
    return CStarResult(float(c_hi), history, profile, residual, branch, iterations, cap)


def _relabel(traj: Trajectory, kind: OutcomeKind) -> Trajectory:
    o = traj.outcome
    return replace(traj, outcome=ShotOutcome(kind, o.r0, o.y1))


def graded_grid(s0: float, n_cheb: int = 8193, t_min: float = 1e-12, ratio: float = 1.02) -> np.ndarray:
    """Chebyshev points plus geometric clustering towards both endpoints."""
    t = [t_min]
    while t[-1] < 1e-2:
        t.append(t[-1] * ratio)
    t = np.array(t)
    pts = np.concatenate([chebyshev_lobatto(n_cheb), -1.0 + t, 1.0 - t, [s0]])
    return np.unique(np.clip(pts, -1.0, 1.0))


def stationary_profile(spec: ProblemSpec) -> Trajectory:
    """y0 = p' G on a graded grid, accumulated from the nearer endpoint (G(1) = 0)."""
    r = graded_grid(spec.s0)
    panels = panel_integrals(spec.g_array, r)
    from_left = np.concatenate([[0.0], np.cumsum(panels)])
    from_right = -np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]])
    G = np.where(r <= spec.s0, from_left, from_right)
    G[0] = G[-1] = 0.0
    pc = spec.p_conj
    values = pc * G
    slopes = pc * spec.g_array(r)
    outcome = ShotOutcome(OutcomeKind.CONVERGED, None, 0.0)
    return Trajectory(0.0, r, values, slopes, outcome, 0.0, spec)

