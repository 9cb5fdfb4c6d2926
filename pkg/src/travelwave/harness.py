"""Executable property checks: comparison principles, envelopes, residuals and
manufactured solutions with known (c, y).

Every check returns a PropertyReport instead of raising, so a suite can run
them all and aggregate the outcome.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ExponentUnavailable, HypothesisViolation, SolverError, TravelWaveError
from .families import cubic, cubic_reaction
from .problem import AsymptoticExponents, ProblemSpec, build_problem, cumulative_potential, resolve_exponents
from .reconstruct import WaveProfile
from .shooter import (
    ATOL_FACTOR,
    OutcomeKind,
    Trajectory,
    integrate_forward,
    hermite_eval,
    shoot,
)
from .speed import Branch, CStarResult, solve_cstar

MANUFACTURED_KAPPA = 2.0
MATRIX_P = (1.5, 2.0, 3.0)
MATRIX_AB = ((2.0, 2.0), (2.5, 3.0))
MATRIX_C = (-0.5, -2.0)

_RANK = {OutcomeKind.UNDERSHOOT: 0, OutcomeKind.CONVERGED: 1, OutcomeKind.OVERSHOOT: 2}


@dataclass(frozen=True)
class PropertyReport:
    check_name: str
    passed: bool
    margin: float
    context: dict = field(default_factory=dict)
    control: bool = False  # negative control: expected to fail

    def to_dict(self) -> dict:
        d = asdict(self)
        d["margin"] = _json_float(self.margin)
        return d


def _json_float(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("+inf" if v > 0 else "-inf")
    return v


# ---------------------------------------------------------------- manufactured


@dataclass(frozen=True)
class ManufacturedProblem:
    """Planted solution y* = kappa (1+r)^a (1-r)^b with speed c_target."""

    kappa: float
    a: float
    b: float
    c_target: float
    p: float
    spec: ProblemSpec = field(repr=False)

    def y_target(self, r):
        r = np.asarray(r, dtype=float)
        return self.kappa * (1.0 + r) ** self.a * (1.0 - r) ** self.b

    def g_manufactured(self, r):
        return self.spec.reaction(r)


def _manufactured_g(kappa, a, b, c, p):
    pc = p / (p - 1.0)
    inv_p = 1.0 / p

    def g(r):
        if isinstance(r, np.ndarray):
            t = np.clip(1.0 + r, 0.0, 2.0)
            s = np.clip(1.0 - r, 0.0, 2.0)
        else:
            t = min(max(1.0 + r, 0.0), 2.0)
            s = min(max(1.0 - r, 0.0), 2.0)
        y = kappa * t**a * s**b
        dy = kappa * (a * t ** (a - 1.0) * s**b - b * t**a * s ** (b - 1.0))
        return dy / pc - c * y**inv_p

    return g


def manufactured_exponents(kappa, a, b, c, p) -> Optional[AsymptoticExponents]:
    """Endpoint power laws of the manufactured g, from its two competing terms."""
    pc = p / (p - 1.0)
    left_y = kappa * 2.0**b   # y* ~ left_y (1+r)^a at -1
    right_y = kappa * 2.0**a  # y* ~ right_y (1-r)^b at +1
    terms_m = [(a - 1.0, left_y * a / pc), (a / p, -c * left_y ** (1.0 / p))]
    terms_p = [(b - 1.0, right_y * b / pc), (b / p, c * right_y ** (1.0 / p))]

    def lead(terms):
        gam = min(t[0] for t in terms)
        coef = sum(t[1] for t in terms if abs(t[0] - gam) < 1e-12)
        return gam, coef

    gm, g0m = lead(terms_m)
    gp, g0p = lead(terms_p)
    if not (g0m > 0 and g0p > 0):
        return None
    return AsymptoticExponents(gm, g0m, gp, g0p)


def manufactured_problem(kappa: float, a: float, b: float, c: float, p: float) -> ManufacturedProblem:
    """g = y*'/p' - c y*^(1/p), so (c, y*) solves the phase-plane problem exactly.

    Raises SignStructureViolation (or another HypothesisViolation) when the
    resulting g is not admissible.
    """
    if not (kappa > 0 and a > 1 and b > 1 and c < 0 and p > 1):
        raise ValueError("need kappa > 0, a > 1, b > 1, c < 0, p > 1")
    exps = manufactured_exponents(kappa, a, b, c, p)
    label = f"manufactured(kappa={kappa:g}, a={a:g}, b={b:g}, c={c:g}, p={p:g})"
    spec = build_problem(p, 1.0, _manufactured_g(kappa, a, b, c, p), exponents=exps, label=label)
    return ManufacturedProblem(kappa, a, b, c, p, spec)


def manufactured_matrix(kappa: float = MANUFACTURED_KAPPA):
    """Yield ((p, a, b, c), ManufacturedProblem or the HypothesisViolation raised)."""
    for p, (a, b), c in itertools.product(MATRIX_P, MATRIX_AB, MATRIX_C):
        try:
            yield (p, a, b, c), manufactured_problem(kappa, a, b, c, p)
        except HypothesisViolation as exc:
            yield (p, a, b, c), exc


def manufactured_admissible(kappa, a, b, c, p) -> bool:
    """Necessary condition for g < 0 next to r = 1: the y*' term must win there.

    That requires b - 1 < b/p (i.e. b < p'), or equality with the y*' term's
    coefficient strictly larger.
    """
    pc = p / (p - 1.0)
    if abs(b - pc) < 1e-12:
        right_y = kappa * 2.0**a
        return right_y * b / pc > -c * right_y ** (1.0 / p)
    return b < pc


def check_manufactured_recovery(mp: ManufacturedProblem, tol_c=1e-10, tol_ode=1e-10,
                                c_tol=1e-8, y_tol=1e-6) -> PropertyReport:
    name = f"manufactured_recovery[p={mp.p:g},a={mp.a:g},b={mp.b:g},c={mp.c_target:g}]"
    ctx = {"p": mp.p, "a": mp.a, "b": mp.b, "kappa": mp.kappa, "c_target": mp.c_target}
    try:
        res = solve_cstar(mp.spec, tol_c, tol_ode)
    except TravelWaveError as exc:
        return PropertyReport(name, False, -math.inf, {**ctx, "error": repr(exc)})
    r = np.linspace(-1.0, 1.0, 4001)
    y_err = float(np.max(np.abs(res.profile(r) - mp.y_target(r))))
    c_err = abs(res.c_star - mp.c_target)
    margin = min(c_tol - c_err, y_tol - y_err)
    ctx.update(c_star=res.c_star, c_error=c_err, y_error=y_err)
    return PropertyReport(name, margin >= 0.0, margin, ctx)


# ---------------------------------------------------------------- comparison


def _union_nodes(*trajs: Trajectory, lo=-1.0, hi=1.0) -> np.ndarray:
    r = np.unique(np.concatenate([t.nodes for t in trajs]))
    return r[(r >= lo) & (r <= hi)]


def check_forward_comparison(spec: ProblemSpec, c1: float, c2: float, tol: float = 1e-10) -> PropertyReport:
    """c1 <= c2 <= 0 implies y_c1 <= y_c2 on [-1, 1] and ordered outcomes."""
    name = f"forward_comparison[c1={c1:.6g},c2={c2:.6g}]"
    if not c1 <= c2 <= 0.0:
        raise ValueError("need c1 <= c2 <= 0")
    t1 = shoot(spec, c1, tol)
    t2 = shoot(spec, c2, tol)
    r = _union_nodes(t1, t2)
    slack = 2.0 * tol
    gap = t2(r) - t1(r)
    margin = float(min(np.min(gap), t2.terminal - t1.terminal)) + slack
    ordered = _RANK[t1.outcome.kind] <= _RANK[t2.outcome.kind]
    ctx = {"c1": c1, "c2": c2, "outcome1": t1.outcome.kind.value, "outcome2": t2.outcome.kind.value,
           "nodes": int(r.size)}
    return PropertyReport(name, bool(margin >= 0.0 and ordered), margin, ctx)


def check_zero_speed_identity(spec: ProblemSpec, tol: float = 1e-10) -> PropertyReport:
    """y_0 equals p' G."""
    traj = shoot(spec, 0.0, tol)
    r = traj.nodes
    exact = spec.p_conj * cumulative_potential(spec, r)
    err = float(np.max(np.abs(traj(r) - exact)))
    bound = max(1e-8, 100.0 * tol)
    return PropertyReport("zero_speed_identity", err <= bound, bound - err, {"max_error": err})


def _forward_from(spec, c, r_start, y_start, tol):
    rs, ys, fs, _, status = integrate_forward(spec, c, r_start, y_start, tol, tol * ATOL_FACTOR,
                                              h_init=1e-4)
    return np.array(rs), np.array(ys), np.array(fs), status == "crossed"


def check_backward_comparison(spec: ProblemSpec, c: float, tol: float = 1e-10,
                              c_ref: Optional[float] = None) -> PropertyReport:
    """Ordering on [s0, 1] for a supersolution vanishing at 1 and a subsolution.

    The supersolution is the boundary-value profile at c_ref = c* >= c (it
    satisfies the inequality for every smaller c because y^(1/p) >= 0).  The
    subsolution is the solution at parameter c started at s0 from the
    smallest value whose trajectory stays nonnegative up to r = 1.  The
    comparison result then requires super <= sub on [s0, 1].
    """
    if c_ref is None:
        c_ref = solve_cstar(spec, tol_ode=tol).c_star
    name = f"backward_comparison[c={c:.6g},c_ref={c_ref:.6g}]"
    if c > c_ref:
        raise ValueError("need c <= c_ref")
    sup_traj = shoot(spec, c_ref, tol)
    s0 = spec.s0
    hi = max(float(sup_traj(s0)), 1e-12)
    while _forward_from(spec, c, s0, hi, tol)[3]:
        hi *= 2.0
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _forward_from(spec, c, s0, mid, tol)[3]:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-3 * tol:
            break
    rs, ys, fs, _ = _forward_from(spec, c, s0, hi, tol)
    r = np.unique(np.concatenate([rs, sup_traj.nodes[sup_traj.nodes >= s0]]))
    sub = hermite_eval(rs, ys, fs, r)
    sup = sup_traj(r)
    slack = 2.0 * tol + max(sup_traj.terminal, 0.0)
    margin = float(np.min(sub - sup)) + slack
    ctx = {"c": c, "c_ref": c_ref, "sub_start": hi, "sub_terminal": float(ys[-1]),
           "super_terminal": sup_traj.terminal}
    return PropertyReport(name, margin >= 0.0, margin, ctx)


# ---------------------------------------------------------------- envelopes


def _apply_A(spec: ProblemSpec, c: float, gamma: float, kappa: float, t: np.ndarray) -> np.ndarray:
    """(A w_kappa)(r) at r = -1 + t for w_kappa = kappa (1+r)^(1+gamma)."""
    w = kappa * t ** (1.0 + gamma)
    dw = kappa * (1.0 + gamma) * t**gamma
    return dw - spec.p_conj * (c * w ** (1.0 / spec.p) + spec.g_array(-1.0 + t))


def _kappa_search(spec, c, gamma, t, want_negative: bool) -> float:
    """Largest kappa with A w < 0 on all samples, or smallest with A w > 0.

    A w_kappa is increasing in kappa for c <= 0, so bisection in log kappa works.
    """
    def ok(k):
        v = _apply_A(spec, c, gamma, k, t)
        return bool(np.all(v < 0.0)) if want_negative else bool(np.all(v > 0.0))

    lo, hi = -40.0, 40.0  # log kappa
    if want_negative:
        if not ok(math.exp(lo)):
            return math.nan
        if ok(math.exp(hi)):
            return math.inf
    else:
        if not ok(math.exp(hi)):
            return math.nan
        if ok(math.exp(lo)):
            return 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if ok(math.exp(mid)) == want_negative:
            lo = mid
        else:
            hi = mid
    return math.exp(lo) if want_negative else math.exp(hi)


def check_envelopes(spec: ProblemSpec, result: CStarResult, rho: float = 0.05,
                    tol: float = 1e-10, exponents: Optional[AsymptoticExponents] = None) -> PropertyReport:
    """Power-law envelopes kappa (1+r)^(1+gamma) around y_{c*} on (-1, -1+rho).

    Two-sided when c* = 0 or gamma- <= 1/(p-1), upper bound only otherwise.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if exponents is None:
        exponents = resolve_exponents(spec)
    if exponents is None:
        raise ExponentUnavailable("no usable endpoint exponents for the envelope check")
    gamma = exponents.gamma_minus
    c = result.c_star
    two_sided = c == 0.0 or gamma <= 1.0 / (spec.p - 1.0)

    t_sign = np.geomspace(1e-10, rho, 400, endpoint=False)
    traj = result.profile
    t_lo = max(1e-6, 10.0 * traj.head)
    t_cmp = np.geomspace(t_lo, rho, 200, endpoint=False)
    y = traj(-1.0 + t_cmp)
    shape = t_cmp ** (1.0 + gamma)
    slack = 2.0 * tol

    k_up = _kappa_search(spec, c, gamma, t_sign, want_negative=False)
    ctx = {"gamma_minus": gamma, "two_sided": two_sided, "rho": rho, "kappa_upper": k_up,
           "c_star": c}
    if not math.isfinite(k_up):
        return PropertyReport("envelope", False, -math.inf, ctx)
    margin = float(np.min(k_up * shape - y)) + slack
    if two_sided:
        k_lo = _kappa_search(spec, c, gamma, t_sign, want_negative=True)
        ctx["kappa_lower"] = k_lo
        if not (math.isfinite(k_lo) and k_lo > 0.0):
            return PropertyReport("envelope", False, -math.inf, ctx)
        margin = min(margin, float(np.min(y - k_lo * shape)) + slack)
    return PropertyReport("envelope", margin >= 0.0, margin, ctx)


# ---------------------------------------------------------------- residuals


def _interior(u: np.ndarray, eta: float) -> np.ndarray:
    return np.abs(u) <= 1.0 - eta


def check_first_integral(spec: ProblemSpec, profile: WaveProfile, result: CStarResult,
                         tol: float = 1e-6, eta: float = 1e-3, name: str = "first_integral",
                         control: bool = False) -> PropertyReport:
    """d(U)^p' |U'|^p = y(U) on interior samples, within tol relative, and (for
    smooth reactions) the finite-difference residual shrinks when the sample
    spacing halves.

    U' is the derivative of the interpolated profile, not the closed-form
    slope, so the identity tests the inversion as well.
    """
    u = profile.u
    du = profile._interp.derivative()(profile.xi)
    mask = _interior(u, eta) & np.isfinite(du)
    if not np.any(mask):
        return PropertyReport(name, False, -math.inf, {"error": "no interior samples"}, control)
    lhs = spec.d_array(u[mask]) ** spec.p_conj * np.abs(du[mask]) ** spec.p
    rhs = result.profile(u[mask])
    rel = float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))
    coarse = fd_residual(spec, profile.xi[::2], u[::2], result.c_star, eta)
    fine = fd_residual(spec, profile.xi, u, result.c_star, eta)
    # second differences only converge when f is smooth; tabulated data has kinks
    smooth = spec.breakpoints.size == 0
    decays = fine < coarse or not smooth
    margin = tol - rel
    ctx = {"max_relative_error": rel, "fd_residual": fine, "fd_residual_coarse": coarse,
           "samples": int(mask.sum()), "fd_decay_required": smooth}
    return PropertyReport(name, bool(margin >= 0.0 and decays), margin, ctx, control)


def fd_residual(spec: ProblemSpec, xi: np.ndarray, u: np.ndarray, c: float, eta: float = 1e-3,
                order: int = 2) -> float:
    """Sup of the finite-difference residual of (d |U'|^(p-2) U')' + c U' - f(U).

    Uses only the sampled u on a uniform grid, at points whose stencil stays in
    |U| <= 1 - eta.  ``order=2``: midpoint fluxes from one-sided slopes, then a
    centred difference.  ``order=4``: five-point derivatives for U' and for
    the flux.
    """
    dx = xi[1] - xi[0]
    if not np.allclose(np.diff(xi), dx, rtol=1e-9, atol=0.0):
        raise ValueError("fd_residual needs a uniform grid")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    p = spec.p

    def flux(um, s):
        with np.errstate(invalid="ignore", divide="ignore"):
            out = spec.d_array(um) * np.abs(s) ** (p - 2.0) * s
        return np.where(s == 0.0, 0.0, out)

    if order == 2:
        F = flux(0.5 * (u[1:] + u[:-1]), np.diff(u) / dx)
        div = np.diff(F) / dx
        dudx = (u[2:] - u[:-2]) / (2.0 * dx)
        reach = 1
    else:
        def d5(v):
            return (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * dx)

        du = d5(u)
        div = d5(flux(u[2:-2], du))
        dudx = du[2:-2]
        reach = 4
    uc = u[reach:-reach]
    res = div + c * dudx - spec.reaction(uc)
    ok = _interior(u, eta)
    mask = np.ones(uc.size, dtype=bool)
    for k in range(2 * reach + 1):
        mask &= ok[k:u.size - 2 * reach + k]
    return float(np.max(np.abs(res[mask]))) if np.any(mask) else math.nan


def noisy_control(profile: WaveProfile, level: float = 1e-3, seed: int = 0) -> WaveProfile:
    """Copy of the profile with u perturbed by uniform noise (negative control)."""
    from dataclasses import replace

    rng = np.random.default_rng(seed)
    u = np.clip(profile.u + level * rng.uniform(-1.0, 1.0, profile.u.shape), -1.0, 1.0)
    return replace(profile, u=u)


# ---------------------------------------------------------------- solver-level


def check_uniqueness_probe(spec: ProblemSpec, result: CStarResult, tol_c: float = 1e-10,
                           tol_ode: float = 1e-10) -> PropertyReport:
    """Undershoot at c* - 10 tol_c, overshoot with y(1) > 0 at c* + 10 tol_c."""
    lo = shoot(spec, result.c_star - 10.0 * tol_c, tol_ode, boundary_tol=0.0)
    hi = shoot(spec, result.c_star + 10.0 * tol_c, tol_ode, boundary_tol=0.0)
    passed = lo.outcome.kind is OutcomeKind.UNDERSHOOT and \
        hi.outcome.kind is OutcomeKind.OVERSHOOT and hi.terminal > 0.0
    ctx = {"below": lo.outcome.kind.value, "above": hi.outcome.kind.value,
           "terminal_above": hi.terminal, "terminal_below": lo.terminal}
    return PropertyReport("uniqueness_probe", passed, min(hi.terminal, -lo.terminal), ctx)


def check_bisection_history(result: CStarResult) -> PropertyReport:
    """Bisection moves c_lo on undershoots and c_hi otherwise; widths shrink."""
    hist = [h for h in result.bracket_history if h.phase == "bisect"]
    descent = [h for h in result.bracket_history if h.phase == "descent"]
    bad = 0
    prev = (descent[-1].c_lo, descent[-1].c_hi) if descent else None
    for h in hist:
        if not h.c_lo < h.c_hi:
            bad += 1
        if prev is not None:
            lo0, hi0 = prev
            if h.outcome is OutcomeKind.UNDERSHOOT:
                ok = h.c_hi == hi0 and h.c_lo > lo0
            else:
                ok = h.c_lo == lo0 and h.c_hi < hi0
            bad += not ok
        prev = (h.c_lo, h.c_hi)
    widths = [h.c_hi - h.c_lo for h in hist]
    margin = float(min(widths)) if widths else 0.0
    return PropertyReport("bisection_history", bad == 0, margin,
                          {"steps": len(hist), "violations": bad})


def check_scaling(s0: float = 0.3, lam: float = 4.0, rel_tol: float = 1e-6) -> PropertyReport:
    """For p = 2 and d = 1, f -> lam f rescales c* by sqrt(lam)."""
    base = solve_cstar(cubic(s0)).c_star
    f = cubic_reaction(s0)
    scaled_spec = build_problem(2.0, 1.0, lambda s: lam * f(s), label="scaled cubic")
    scaled = solve_cstar(scaled_spec).c_star
    rel = abs(scaled / base - math.sqrt(lam)) / math.sqrt(lam)
    return PropertyReport(f"scaling[lambda={lam:g}]", rel <= rel_tol, rel_tol - rel,
                          {"c_base": base, "c_scaled": scaled, "relative_error": rel})


# ---------------------------------------------------------------- suite


def _guard(name: str, fn: Callable[[], PropertyReport]) -> PropertyReport:
    try:
        return fn()
    except ExponentUnavailable as exc:
        return PropertyReport(name, True, 0.0, {"skipped": str(exc)})
    except (SolverError, HypothesisViolation) as exc:
        return PropertyReport(name, False, -math.inf, {"error": repr(exc)})


Check = tuple  # (name, zero-argument callable returning a PropertyReport)


def instance_checks(spec: ProblemSpec, result: CStarResult, profile: Optional[WaveProfile],
                    tol_c: float = 1e-10, tol_ode: float = 1e-10) -> list[Check]:
    """The checks that apply to one solved instance."""
    checks = []
    c = result.c_star
    if result.branch is Branch.TRAVELLING_WAVE:
        for c1, c2 in ((2.0 * c, c), (c, 0.5 * c), (2.0 * c, 0.0)):
            checks.append((f"forward_comparison[c1={c1:.6g},c2={c2:.6g}]",
                           lambda c1=c1, c2=c2: check_forward_comparison(spec, c1, c2, tol_ode)))
        checks.append(("backward_comparison",
                       lambda: check_backward_comparison(spec, c - 0.1, tol_ode, c_ref=c)))
        checks.append(("uniqueness_probe", lambda: check_uniqueness_probe(spec, result, tol_c, tol_ode)))
        checks.append(("bisection_history", lambda: check_bisection_history(result)))
    checks.append(("zero_speed_identity", lambda: check_zero_speed_identity(spec, tol_ode)))
    checks.append(("envelope", lambda: check_envelopes(spec, result, tol=tol_ode)))
    if profile is not None:
        checks.append(("first_integral", lambda: check_first_integral(spec, profile, result)))
        checks.append(("first_integral_noisy_control", lambda: check_first_integral(
            spec, noisy_control(profile), result, name="first_integral_noisy_control", control=True)))
    return checks


def matrix_checks(tol_c: float = 1e-10, tol_ode: float = 1e-10) -> list[Check]:
    """Recovery on every admissible matrix instance; rejected instances must be
    provably inadmissible."""
    checks = []
    for (p, a, b, c), mp in manufactured_matrix():
        tag = f"[p={p:g},a={a:g},b={b:g},c={c:g}]"
        if isinstance(mp, ManufacturedProblem):
            checks.append((f"manufactured_recovery{tag}",
                           lambda mp=mp: check_manufactured_recovery(mp, tol_c, tol_ode)))
        else:
            provable = not manufactured_admissible(MANUFACTURED_KAPPA, a, b, c, p)
            name = f"manufactured_rejected{tag}"
            checks.append((name, lambda name=name, provable=provable, mp=mp: PropertyReport(
                name, provable, 0.0, {"rejected_by": type(mp).__name__,
                                      "provably_inadmissible": provable})))
    return checks


def run_suite(checks: list[Check], max_workers: int = 4) -> list[PropertyReport]:
    """Run checks concurrently; results sorted by check_name."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        reports = list(pool.map(lambda nc: _guard(nc[0], nc[1]), checks))
    return sorted(reports, key=lambda r: r.check_name)


def aggregate(reports: list[PropertyReport]) -> bool:
    """Pass iff every regular check passes and every negative control fails."""
    return all((not r.passed) if r.control else r.passed for r in reports)
