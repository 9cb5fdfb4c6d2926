"""Wave profile U(xi) from the phase-plane solution y(r).

With V = y^(1/p') the profile satisfies dx/dU = -(d(U)/V(U))^(1/(p-1)), so

    x(U) = x0 - int_0^U h(r) dr,    h = d^(1/(p-1)) y^(-1/p).

h is smooth inside (-1, 1) and blows up like a power of the distance to each
endpoint.  The integral is done by Gauss-Legendre panels on [-1+delta, 1-delta]
and by an analytic power-law tail A t^(-q) (1 + B t) on the last stretch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ProfileNotPositive, SingularQuadratureFailure
from .problem import (
    _GL_NODES,
    _GL_WEIGHTS,
    AsymptoticExponents,
    ProblemSpec,
    panel_integrals,
    resolve_exponents,
)
from .speed import CStarResult

STITCH = 1e-4
T_MIN = 1e-12
TAIL_CUT = 1e-8
TAIL_SPAN = 4.0
LAYER = 0.9
PANELS = 16384
TAIL_SAMPLES_PER_DECADE = 8


class Interface(str, enum.Enum):
    FINITE = "Finite"
    INFINITE = "Infinite"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class InterfaceClass:
    left: Interface   # x1, where U reaches +1; decided by gamma+
    right: Interface  # x_minus1, where U reaches -1; decided by gamma-
    criterion: dict = field(default_factory=dict)


def _classify_side(gamma: float, p: float) -> Interface:
    if gamma >= p - 1.0:
        return Interface.INFINITE
    return Interface.FINITE if p <= 2.0 else Interface.UNDETERMINED


def classify_interfaces(exponents: AsymptoticExponents, p: float) -> InterfaceClass:
    """Exponent rule: for 1 < p <= 2 finite iff gamma < p-1; for p > 2 infinite
    when gamma >= p-1 and undetermined otherwise."""
    crit = {
        "left": {"gamma": exponents.gamma_plus, "p_minus_1": p - 1.0},
        "right": {"gamma": exponents.gamma_minus, "p_minus_1": p - 1.0},
    }
    return InterfaceClass(
        _classify_side(exponents.gamma_plus, p),
        _classify_side(exponents.gamma_minus, p),
        crit,
    )


def tail_exponent(exponents: AsymptoticExponents, p: float, c: float, side: str) -> float:
    """Exponent q with h ~ t^(-q) at the given end (t = distance to the end).

    y ~ t^e with e = 1 + gamma when the reaction term dominates the balance;
    otherwise e = gamma p at -1 (slow manifold) and e = p' at +1 (speed term).
    """
    inv = 1.0 / (p - 1.0)
    if side == "minus":
        gam = exponents.gamma_minus
        e = 1.0 + gam if (c == 0.0 or gam <= inv) else gam * p
    else:
        gam = exponents.gamma_plus
        e = 1.0 + gam if (c == 0.0 or gam <= inv) else p / (p - 1.0)
    return e / p


@dataclass(frozen=True)
class TailModel:
    """h(t) ~ A t^(-q) (1 + B t) on 0 < t <= t_s."""

    q: float
    A: float
    B: float
    t_s: float
    q_source: str
    q_numerical: float  # growth rate of the numerical partial integrals
    error_bar: float

    @property
    def finite(self) -> bool:
        return self.q < 1.0

    def integral(self, t, with_correction: bool = True):
        """int_t^{t_s} of the model (t may be an array; t = 0 allowed when finite)."""
        t = np.asarray(t, dtype=float)
        out = self.A * _power_integral(-self.q, t, self.t_s)
        if with_correction:
            out = out + self.A * self.B * _power_integral(1.0 - self.q, t, self.t_s)
        return out


def _power_integral(k: float, a, b: float):
    """int_a^b s^k ds, elementwise in a (a >= 0)."""
    a = np.asarray(a, dtype=float)
    if abs(k + 1.0) < 1e-14:
        with np.errstate(divide="ignore"):
            return np.log(b) - np.log(a)
    with np.errstate(divide="ignore"):
        return (b ** (k + 1.0) - a ** (k + 1.0)) / (k + 1.0)


@dataclass(frozen=True)
class WaveProfile:
    xi: np.ndarray
    u: np.ndarray
    du: np.ndarray
    x0: float
    x1: float
    x_minus1: float
    c_star: float
    classes: InterfaceClass
    p: float
    tails: dict = field(repr=False)
    table_x: np.ndarray = field(repr=False)
    table_u: np.ndarray = field(repr=False)
    _interp: CubicHermiteSpline = field(repr=False, compare=False)
    _du_of_u: object = field(repr=False, compare=False)

    @property
    def width(self) -> float:
        return self.x_minus1 - self.x1

    def sidecar(self) -> dict:
        return {
            "c_star": self.c_star,
            "x1": _inf_str(self.x1),
            "x_minus1": _inf_str(self.x_minus1),
            "left_class": self.classes.left.value,
            "right_class": self.classes.right.value,
            "x0": self.x0,
        }


def _inf_str(v: float):
    if math.isinf(v):
        return "+inf" if v > 0 else "-inf"
    return v


def _slope_function(spec: ProblemSpec, y):
    """U'(U) = -y(U)^(1/p) / d(U)^(1/(p-1)), zero at U = +-1."""
    k = 1.0 / (spec.p - 1.0)

    def du(u):
        u = np.asarray(u, dtype=float)
        yv = np.maximum(y(np.clip(u, -1.0, 1.0)), 0.0)
        out = -yv ** (1.0 / spec.p) / spec.d_array(u) ** k
        out[np.abs(u) >= 1.0] = 0.0
        return out

    return du


def _h_function(spec: ProblemSpec, y):
    k = 1.0 / (spec.p - 1.0)

    def h(r):
        r = np.asarray(r, dtype=float)
        return spec.d_array(r) ** k * y(r) ** (-1.0 / spec.p)

    return h


def _fit_tail(h, side: str, q: float, q_source: str, t_s: float) -> TailModel:
    sgn = -1.0 if side == "minus" else 1.0  # t measured from U = sgn * 1
    end = sgn * 1.0

    def h_t(t):
        return h(np.atleast_1d(end - sgn * np.asarray(t, dtype=float)))

    h1, h2 = h_t([t_s, 2.0 * t_s])
    R = h2 * (2.0 * t_s) ** q / (h1 * t_s**q)
    B = (R - 1.0) / (t_s * (2.0 - R))
    A = h1 * t_s**q / (1.0 + B * t_s)

    # Numerical partial integrals int_{t_k}^{t_s} h at t_k = t_s 2^-k, k = 0..6,
    # from the trajectory itself; their increments grow like 2^(k (q-1)).
    edges = t_s * 2.0 ** -np.arange(7.0)
    incr = np.array([
        panel_integrals(lambda t: h_t(t), np.array([edges[k + 1], edges[k]]))[0]
        for k in range(len(edges) - 1)
    ])
    ratios = incr[1:] / incr[:-1]
    q_num = float(1.0 + np.log2(np.median(ratios)))

    model = TailModel(q, float(A), float(B), t_s, q_source, q_num, 0.0)
    bare = TailModel(q, float(h1 * t_s**q), 0.0, t_s, q_source, q_num, 0.0)
    err = 0.0
    if model.finite:
        err = float(abs(model.integral(0.0) - bare.integral(0.0, with_correction=False)))
    return TailModel(q, float(A), float(B), t_s, q_source, q_num, err)


def reconstruct(
    spec: ProblemSpec,
    result: CStarResult,
    x0: float = 0.0,
    n: int = 2048,
    *,
    exponents: Optional[AsymptoticExponents] = None,
    stitch: float = STITCH,
    panels: int = PANELS,
    t_min: float = T_MIN,
    tail_cut: float = TAIL_CUT,
) -> WaveProfile:
    """Build U(xi) on n uniformly spaced points, with U(x0) = 0."""
    if n < 16:
        raise ValueError("n must be at least 16")
    y = result.profile
    c = result.c_star

    probe = np.concatenate([[-1.0 + stitch, 1.0 - stitch], np.linspace(-1, 1, 257)[1:-1]])
    if np.any(y(probe) <= 0.0):
        raise ProfileNotPositive("phase-plane profile is not positive on (-1, 1)")

    if exponents is None:
        exponents = resolve_exponents(spec)
    h = _h_function(spec, y)

    tails = {}
    for side in ("minus", "plus"):
        if exponents is not None:
            q, src = tail_exponent(exponents, spec.p, c, side), "exponents"
        else:
            q, src = _local_slope(h, side, stitch), "local-slope"
        tails[side] = _fit_tail(h, side, q, src, stitch)

    if exponents is not None:
        classes = classify_interfaces(exponents, spec.p)
    else:
        classes = InterfaceClass(Interface.UNDETERMINED, Interface.UNDETERMINED,
                                 {"left": None, "right": None})
    for side, cls in (("minus", classes.right), ("plus", classes.left)):
        if cls is Interface.FINITE and not tails[side].finite:
            raise SingularQuadratureFailure(
                f"{side} end classified Finite but the tail exponent is q = {tails[side].q:.6g}"
            )

    # Interior table on [-1 + stitch, 1 - stitch], Chebyshev-clustered, with U = 0.
    half = 1.0 - stitch
    k = np.arange(panels + 1)
    u_mid = np.union1d(-half * np.cos(np.pi * k / panels), [0.0])
    I = panel_integrals(h, u_mid)
    S = np.concatenate([[0.0], np.cumsum(I)])
    S0 = S[np.searchsorted(u_mid, 0.0)]
    x_mid = x0 - (S - S0)

    # Tails: geometric t from stitch down to t_min.
    decades = math.log10(stitch / t_min)
    t_tail = stitch * 10.0 ** -np.linspace(0.0, decades, int(decades * TAIL_SAMPLES_PER_DECADE) + 1)[1:]
    tm, tp = tails["minus"], tails["plus"]
    x_left_end = x_mid[0] + tm.integral(t_tail)     # U = -1 + t, x grows
    x_right_end = x_mid[-1] - tp.integral(t_tail)   # U = 1 - t, x shrinks
    x_minus1 = float(x_mid[0] + tm.integral(0.0)) if tm.finite else math.inf
    x1 = float(x_mid[-1] - tp.integral(0.0)) if tp.finite else -math.inf

    u_tab = np.concatenate([(-1.0 + t_tail)[::-1], u_mid, (1.0 - t_tail)])
    x_tab = np.concatenate([x_left_end[::-1], x_mid, x_right_end])
    if tm.finite:
        u_tab, x_tab = np.concatenate([[-1.0], u_tab]), np.concatenate([[x_minus1], x_tab])
    if tp.finite:
        u_tab, x_tab = np.concatenate([u_tab, [1.0]]), np.concatenate([x_tab, [x1]])

    # x ascending (U descending) for the inverse map.
    x_asc = x_tab[::-1]
    u_asc = u_tab[::-1]
    keep = np.concatenate([[True], np.diff(x_asc) > 0.0])
    x_asc, u_asc = x_asc[keep], u_asc[keep]

    du_of_u = _slope_function(spec, y)
    slopes = du_of_u(u_asc)
    slopes = _limit_slopes(x_asc, u_asc, slopes)
    interp = CubicHermiteSpline(x_asc, u_asc, slopes, extrapolate=False)

    # Output window: exact interfaces when finite; otherwise cut at 1 - |U| =
    # tail_cut, but never more than TAIL_SPAN layer widths beyond U = +-LAYER.
    x_of_u = lambda v: float(np.interp(v, u_tab, x_tab))  # noqa: E731
    x_hi_layer, x_lo_layer = x_of_u(-LAYER), x_of_u(LAYER)
    span = TAIL_SPAN * (x_hi_layer - x_lo_layer)
    lo = x1 if tp.finite else max(x_of_u(1.0 - tail_cut), x_lo_layer - span)
    hi = x_minus1 if tm.finite else min(x_of_u(-1.0 + tail_cut), x_hi_layer + span)
    xi = np.linspace(lo, hi, n)
    u = np.clip(interp(xi), -1.0, 1.0)
    u = _polish(xi, u, u_mid, x_mid, h)
    if tp.finite:
        u[0] = 1.0
    if tm.finite:
        u[-1] = -1.0
    du = du_of_u(u)
    return WaveProfile(
        xi=xi, u=u, du=du, x0=float(x0), x1=x1, x_minus1=x_minus1, c_star=float(c),
        classes=classes, p=spec.p, tails=tails, table_x=x_asc, table_u=u_asc,
        _interp=interp, _du_of_u=du_of_u,
    )


def _polish(xi, u, u_nodes, x_nodes, h, iterations: int = 3):
    """Newton refinement of interior samples against the quadrature map
    x(U) = x_k - int_{u_k}^U h, with u_k the nearest table node below U."""
    inside = (u > u_nodes[0]) & (u < u_nodes[-1])
    if not np.any(inside):
        return u
    v = u[inside].copy()
    target = xi[inside]
    for _ in range(iterations):
        k = np.clip(np.searchsorted(u_nodes, v) - 1, 0, len(u_nodes) - 2)
        a = u_nodes[k]
        half = 0.5 * (v - a)
        pts = (0.5 * (a + v))[:, None] + half[:, None] * _GL_NODES[None, :]
        x = x_nodes[k] - half * (h(pts.ravel()).reshape(pts.shape) @ _GL_WEIGHTS)
        step = (x - target) / h(v)
        v = np.clip(v + step, u_nodes[0], u_nodes[-1])
    out = u.copy()
    out[inside] = v
    return out


def _local_slope(h, side: str, t_s: float) -> float:
    end = -1.0 if side == "minus" else 1.0
    sgn = -1.0 if side == "minus" else 1.0
    t = np.array([t_s / 4.0, t_s])
    hv = h(end - sgn * t)
    return float(-np.log(hv[1] / hv[0]) / np.log(4.0))


def _limit_slopes(x, u, m):
    """Fritsch-Carlson limiter so the Hermite interpolant stays monotone."""
    m = m.copy()
    delta = np.diff(u) / np.diff(x)
    for k in range(len(delta)):
        if delta[k] == 0.0:
            m[k] = m[k + 1] = 0.0
            continue
        a = m[k] / delta[k]
        b = m[k + 1] / delta[k]
        s = a * a + b * b
        if s > 9.0:
            tau = 3.0 / math.sqrt(s)
            m[k] = tau * a * delta[k]
            m[k + 1] = tau * b * delta[k]
    return m


def evaluate(profile: WaveProfile, xi):
    """(U, U') at xi; (+1, 0) left of the table, (-1, 0) right of it."""
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    u = profile._interp(xi_arr)
    u = np.where(xi_arr < profile.table_x[0], 1.0, u)
    u = np.where(xi_arr > profile.table_x[-1], -1.0, u)
    u = np.clip(u, -1.0, 1.0)
    du = profile._du_of_u(u)
    if np.ndim(xi) == 0:
        return float(u[0]), float(du[0])
    return u, du
