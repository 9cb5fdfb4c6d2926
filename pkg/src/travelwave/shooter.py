"""Forward shooting for y' = p' (c (y+)^(1/p) + g(r)), y(-1) = 0, with c <= 0.

For c <= 0 the map y -> c (y+)^(1/p) is nonincreasing, so the forward problem
is one-sided Lipschitz: solutions are unique, ordered in c, and perturbations
never grow.  Once a positive solution reaches zero at r0 (necessarily r0 >= s0)
it satisfies y' = p' g < 0 from there on, so the remainder of the trajectory is
known in closed form: y(r) = p' (G(r) - G(r0)).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonPositiveStart, PrematureCrossing, StepSizeCollapse
from .problem import ProblemSpec, potential_G

SEED_EPS = 1e-6
EPS_MAX = 0.05
STIFF_LIMIT = 100.0
RTOL = 1e-10
ATOL_FACTOR = 1e-10  # near-relative control: y is tiny next to both ends
H_MIN = 1e-13
H_MAX = 1e-2
CROSSING_TOL = 1e-10
STIFF_CHECK = 1e6  # first stiffness level at which a trapped undershoot is tested

# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


class OutcomeKind(str, enum.Enum):
    UNDERSHOOT = "Undershoot"
    OVERSHOOT = "Overshoot"
    CONVERGED = "Converged"


@dataclass(frozen=True)
class ShotOutcome:
    kind: OutcomeKind
    r0: Optional[float] = None  # crossing location (Undershoot, or Converged after a late crossing)
    y1: Optional[float] = None  # terminal value y(1), continued past a crossing if needed

    @property
    def crossed(self) -> bool:
        return self.r0 is not None


@dataclass(frozen=True)
class Trajectory:
    """One shot: nodes r_i, values y_i, slopes y'(r_i), and its outcome.

    Calling the trajectory evaluates the piecewise cubic Hermite dense output;
    beyond a crossing it returns the exact continuation p'(G(r) - G(r0)).
    """

    c: float
    nodes: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    outcome: ShotOutcome
    tolerance: float
    spec: ProblemSpec = field(repr=False, compare=False)
    rejected_steps: int = 0
    head: float = 0.0  # width of the leading segment evaluated as (g/|c|)^p

    @property
    def terminal(self) -> float:
        return self.outcome.y1

    def __call__(self, r):
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        out = hermite_eval(self.nodes, self.values, self.slopes, r_arr)
        if self.outcome.crossed:
            beyond = r_arr > self.nodes[-1]
            if np.any(beyond):
                out[beyond] = [self._continuation(x) for x in r_arr[beyond]]
        if self.head > 0.0:
            front = r_arr < -1.0 + self.head
            if np.any(front):
                g = np.maximum(self.spec.g_array(r_arr[front]), 0.0)
                out[front] = (g / -self.c) ** self.spec.p
        if np.ndim(r) == 0:
            return float(out[0])
        return out

    def _continuation(self, r: float) -> float:
        r0 = self.outcome.r0
        return self.spec.p_conj * self.spec.integrate(r0, r, epsabs=1e-14, epsrel=1e-12)


def hermite_eval(x, y, dy, t):
    """Piecewise cubic Hermite interpolation (vectorized); t is clipped to [x0, xn]."""
    t = np.clip(t, x[0], x[-1])
    k = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
    x0, x1 = x[k], x[k + 1]
    h = x1 - x0
    s = (t - x0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y[k] + h10 * h * dy[k] + h01 * y[k + 1] + h11 * h * dy[k + 1]


def _hermite_scalar(x0, y0, f0, x1, y1, f1, t):
    h = x1 - x0
    s = (t - x0) / h
    s2 = s * s
    s3 = s2 * s
    return ((2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * f0
            + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * f1)


def integrate_forward(spec: ProblemSpec, c: float, r_start: float, y_start: float,
                      rtol: float, atol: float, h_min: float = H_MIN, h_max: float = H_MAX,
                      h_init: Optional[float] = None, stop_check=None):
    """Dormand-Prince integration from (r_start, y_start) towards r = 1.

    Returns (rs, ys, fs, rejected, status).  status is "crossed" after the
    first accepted step whose end value is <= 0, "trapped" when ``stop_check(r, y)``
    returned True, and "end" otherwise.  ``stop_check`` is consulted each time
    the stiffness |c| y^(-1/p') / (p-1) passes another power of ten above
    STIFF_CHECK.
    """
    g = spec.g
    pc = spec.p_conj
    inv_p = 1.0 / spec.p

    def rhs(r, y):
        return pc * (c * (y ** inv_p if y > 0.0 else 0.0) + g(r))

    r = r_start
    y = y_start
    f = rhs(r, y)
    rs, ys, fs = [r], [y], [f]
    h = h_init if h_init is not None else min(h_max, max(h_min, 0.1 * (r_start + 1.0) or 1e-3))
    rejected = 0
    status = "end"
    next_check = STIFF_CHECK
    # steps end on the reaction's kinks rather than straddling them
    stops = [b for b in spec.breakpoints.tolist() if b > r_start] + [1.0]
    stop_i = 0
    while r < 1.0:
        while stops[stop_i] <= r:
            stop_i += 1
        r_end = stops[stop_i]
        if r + h >= r_end:
            h = r_end - r
        k1 = f
        k2 = rhs(r + _C2 * h, y + h * _A21 * k1)
        k3 = rhs(r + _C3 * h, y + h * (_A31 * k1 + _A32 * k2))
        k4 = rhs(r + _C4 * h, y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
        k5 = rhs(r + _C5 * h, y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
        r_new = r + h if r + h < r_end else r_end
        k6 = rhs(r_new, y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
        y_new = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = rhs(r_new, y_new)
        err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        scale = atol + rtol * max(abs(y), abs(y_new))
        en = abs(err) / scale
        if en <= 1.0:
            r, y, f = r_new, y_new, k7
            rs.append(r)
            ys.append(y)
            fs.append(f)
            if y <= 0.0:
                status = "crossed"
                break
            if stop_check is not None and c < 0.0:
                stiffness = -c / (spec.p - 1.0) * y ** (-1.0 / pc)
                if stiffness > next_check:
                    next_check = 10.0 * stiffness
                    if stop_check(r, y):
                        status = "trapped"
                        break
            fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            h = min(h_max, h * fac)
        else:
            rejected += 1
            h *= max(0.2, 0.9 * en ** -0.2)
            if h < h_min:
                raise StepSizeCollapse(
                    f"step size fell below {h_min:g} at r = {r:.15g} (c = {c:.15g})"
                )
    return rs, ys, fs, rejected, status


def seed_value(spec: ProblemSpec, c: float, eps: float) -> tuple[float, bool]:
    """Asymptotic value of y at r = -1 + eps, and whether it is the slow-manifold branch.

    Every solution satisfies y <= p' G, and for c < 0 it decays towards the
    attracting curve (g / |c|)^p whenever it lies above it.  The smaller of the
    two is the leading-order behaviour: p' G when gamma- <= 1/(p-1), the
    manifold when gamma- > 1/(p-1).
    """
    r = -1.0 + eps
    y_pot = spec.p_conj * spec.integrate(-1.0, r, epsabs=0.0, epsrel=1e-12)
    if c < 0.0:
        g = spec.g(r)
        # compare in logs: g / |c| overflows for tiny |c|
        if g > 0.0 and y_pot > 0.0 and spec.p * (math.log(g) - math.log(-c)) < math.log(y_pot):
            return (g / -c) ** spec.p, True
    return y_pot, False


def choose_start(spec: ProblemSpec, c: float, eps: float = SEED_EPS) -> tuple[float, float, bool]:
    """Move the start point away from -1 until the local stiffness is moderate.

    The linearized rate of the c-term is |c| y^(-1/p') / (p-1); on the
    slow-manifold branch it blows up at -1, but the manifold is attracting,
    so a later start loses no accuracy.
    """
    eps_max = min(EPS_MAX, 0.25 * (1.0 + spec.s0))
    while True:
        y, manifold = seed_value(spec, c, eps)
        if c == 0.0 or not y > 0.0 or eps >= eps_max:
            return eps, y, manifold
        rate = -c / (spec.p - 1.0) * y ** (-1.0 / spec.p_conj)
        if rate * eps <= STIFF_LIMIT:
            return eps, y, manifold
        eps = min(2.0 * eps, eps_max)


def default_boundary_tol(tol: float) -> float:
    return max(1e-8, 100.0 * tol)


def shoot(spec: ProblemSpec, c: float, tol: float = RTOL, *,
          boundary_tol: Optional[float] = None,
          eps: float = SEED_EPS, h_min: float = H_MIN, h_max: float = H_MAX) -> Trajectory:
    """Integrate the initial value problem at speed ``c`` (c <= 0).

    ``tol`` is the relative local error tolerance; the absolute tolerance is
    ``tol * 1e-10``.  The shot is Converged when |y(1)| <= ``boundary_tol``
    (default max(1e-8, 100 tol)), Undershoot when y reaches zero before 1,
    Overshoot otherwise.
    """
    if c > 0.0:
        raise ValueError("shoot requires c <= 0")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if boundary_tol is None:
        boundary_tol = default_boundary_tol(tol)
    eps, y_seed, manifold = choose_start(spec, c, eps)
    if not (y_seed > 0.0 and math.isfinite(y_seed)):
        raise NonPositiveStart(f"seed value {y_seed!r} at r = -1 + {eps:g} is not positive")

    run_tol = tol

    def trapped(r, y):
        return r < spec.s0 and _forced_undershoot(spec, c, r, y)

    for attempt in range(2):
        rs, ys, fs, rejected, status = integrate_forward(
            spec, c, -1.0 + eps, y_seed, run_tol, run_tol * ATOL_FACTOR, h_min, h_max,
            h_init=eps * 0.1, stop_check=trapped,
        )
        r0 = None
        if status == "trapped":
            # y stays below the trapping bound up to s0 and must cross right after it
            rs.append(spec.s0)
            ys.append(0.0)
            fs.append(0.0)
            r0 = spec.s0
            break
        if status == "crossed":
            r0 = _locate_crossing(rs[-2], ys[-2], fs[-2], rs[-1], ys[-1], fs[-1])
            if r0 < spec.s0 - 1e-6:
                if attempt == 0:
                    run_tol = tol / 10.0
                    continue
                if not _forced_undershoot(spec, c, r0, 100.0 * run_tol * ATOL_FACTOR):
                    raise PrematureCrossing(
                        f"trajectory crossed zero at r0 = {r0:.12g} < s0 = {spec.s0:.12g}"
                    )
                # the true solution stays tiny up to s0 and crosses right after it
                rs[-1], ys[-1], fs[-1] = r0, 0.0, 0.0
                if rs[-1] <= rs[-2]:
                    del rs[-2], ys[-2], fs[-2]
                rs.append(spec.s0)
                ys.append(0.0)
                fs.append(0.0)
                r0 = spec.s0
                break
            r0 = max(r0, spec.s0)
            rs[-1], ys[-1] = r0, 0.0
            fs[-1] = spec.p_conj * spec.g(r0)
            if rs[-1] <= rs[-2]:
                del rs[-2], ys[-2], fs[-2]
        break

    g_start = spec.g(-1.0)
    nodes = np.array([-1.0] + rs)
    values = np.array([0.0] + ys)
    slopes = np.array([spec.p_conj * g_start] + fs)

    if r0 is None:
        y1 = float(values[-1])
        kind = OutcomeKind.CONVERGED if abs(y1) <= boundary_tol else OutcomeKind.OVERSHOOT
    else:
        y1 = spec.p_conj * spec.integrate(r0, 1.0, epsabs=1e-14, epsrel=1e-12) if r0 < 1.0 else 0.0
        kind = OutcomeKind.CONVERGED if abs(y1) <= boundary_tol else OutcomeKind.UNDERSHOOT
    return Trajectory(
        c=float(c), nodes=nodes, values=values, slopes=slopes,
        outcome=ShotOutcome(kind, r0, y1), tolerance=run_tol, spec=spec,
        rejected_steps=rejected, head=(eps if manifold else 0.0),
    )


def _forced_undershoot(spec: ProblemSpec, c: float, r_from: float, y_from: float) -> bool:
    """True when the state y(r_from) = y_from (r_from < s0) proves an undershoot.

    On [r_from, s0] the solution cannot exceed max(y_from, sup (g/|c|)^p),
    because y' < 0 above the curve (g/|c|)^p.  If that bound is below half
    the deficit p'(G(s0) - G(1)), the solution must reach zero before r = 1.
    """
    if c >= 0.0:
        return False
    r = np.linspace(r_from, spec.s0, 65)
    g_max = float(np.max(spec.g_array(r)))
    deficit = -spec.p_conj * spec.integrate(spec.s0, 1.0, epsabs=1e-14, epsrel=1e-10)
    if not (deficit > 0.0 and y_from < 0.5 * deficit):
        return False
    # (g_max / |c|)^p < deficit / 2, in logs since g_max / |c| may overflow
    return g_max <= 0.0 or spec.p * (math.log(g_max) - math.log(-c)) < math.log(0.5 * deficit)


def _locate_crossing(r_a, y_a, f_a, r_b, y_b, f_b) -> float:
    """Bisect the Hermite dense output on [r_a, r_b] for its zero (y_a > 0 >= y_b)."""
    lo, hi = r_a, r_b
    while hi - lo > CROSSING_TOL:
        mid = 0.5 * (lo + hi)
        if _hermite_scalar(r_a, y_a, f_a, r_b, y_b, f_b, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def terminal_value(spec: ProblemSpec, c: float, tol: float = RTOL) -> float:
    """y_c(1), nondecreasing in c.

    For an undershooting shot this is the exact continuation past the
    crossing, p'(G(1) - G(r0)) < 0, so the value is negative exactly when the
    shot crosses and still orders shots monotonically.
    """
    return shoot(spec, c, tol).terminal


def potential_profile(spec: ProblemSpec, r: np.ndarray) -> np.ndarray:
    """p' G(r) on a grid, for comparison against shots."""
    return np.array([spec.p_conj * potential_G(spec, float(x)) for x in r])
