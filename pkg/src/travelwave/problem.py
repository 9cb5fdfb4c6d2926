"""Problem data (p, d, f), the transformed reaction g and its potential G.

The transformed reaction is ``g(r) = d(r)**(1/(p-1)) * f(r)`` and the potential
``G(r) = int_{-1}^r g``.  A problem is admissible when g vanishes at -1, s0 and
+1, is positive on (-1, s0), negative on (s0, 1), and G > 0 on (-1, 1).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import (
    HypothesisGFails,
    NonPositiveDiffusion,
    PoorFit,
    QuadratureFailure,
    SignStructureViolation,
)

VALIDATION_POINTS = 1024
ROUNDOFF = 1e-10
S0_TOL = 1e-12
QUAD_TOL = 1e-10

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


class ExponentSource(str, enum.Enum):
    USER_SUPPLIED = "UserSupplied"
    ESTIMATED = "Estimated"


@dataclass(frozen=True)
class AsymptoticExponents:
    """Power laws ``g ~ gamma0_minus (1+r)**gamma_minus`` at -1 and
    ``g ~ -gamma0_plus (1-r)**gamma_plus`` at +1."""

    gamma_minus: float
    gamma0_minus: float
    gamma_plus: float
    gamma0_plus: float
    source: ExponentSource = ExponentSource.USER_SUPPLIED
    residual_minus: float = 0.0
    residual_plus: float = 0.0

    def __post_init__(self):
        for name in ("gamma_minus", "gamma0_minus", "gamma_plus", "gamma0_plus"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")


def chebyshev_lobatto(n: int) -> np.ndarray:
    """n Chebyshev-Lobatto points on [-1, 1], ascending, endpoints included."""
    return -np.cos(np.pi * np.arange(n) / (n - 1))


def _as_vectorized(fn: Callable, probe: np.ndarray) -> Callable:
    try:
        out = np.asarray(fn(probe), dtype=float)
        if out.shape == probe.shape:
            return lambda r: np.asarray(fn(np.asarray(r, dtype=float)), dtype=float)
    except Exception:
        pass
    vec = np.vectorize(fn, otypes=[float])
    return lambda r: vec(np.asarray(r, dtype=float))


def panel_integrals(fn_vec: Callable, edges: np.ndarray) -> np.ndarray:
    """10-point Gauss-Legendre integral of ``fn_vec`` over each [edges[k], edges[k+1]]."""
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b) + half * _GL_NODES[None, :]
    vals = fn_vec(pts.ravel()).reshape(pts.shape)
    return (half[:, 0]) * (vals @ _GL_WEIGHTS)


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable problem description shared by every solve.

    ``diffusion`` and ``reaction`` must be pure functions; they are called with
    Python floats on the hot path and with numpy arrays where vectorization
    helps.
    """

    p: float
    diffusion: Callable[[float], float]
    reaction: Callable[[float], float]
    s0: float
    exponents: Optional[AsymptoticExponents] = None
    unit_diffusion: bool = False
    label: str = ""
    _g_vec: Callable = field(default=None, repr=False, compare=False)
    _d_vec: Callable = field(default=None, repr=False, compare=False)

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1.0)

    @cached_property
    def g(self) -> Callable[[float], float]:
        f = self.reaction
        if self.unit_diffusion:
            return f
        d = self.diffusion
        k = 1.0 / (self.p - 1.0)
        return lambda r: d(r) ** k * f(r)

    def g_array(self, r) -> np.ndarray:
        return self._g_vec(r)

    def d_array(self, r) -> np.ndarray:
        if self.unit_diffusion:
            return np.ones_like(np.asarray(r, dtype=float))
        return self._d_vec(r)

    @cached_property
    def G1(self) -> float:
        """G(1), split at s0 and integrated to near machine precision."""
        left = self.integrate(-1.0, self.s0, epsabs=1e-15, epsrel=1e-13)
        right = self.integrate(self.s0, 1.0, epsabs=1e-15, epsrel=1e-13)
        return left + right

    @cached_property
    def sup_abs_g(self) -> float:
        grid = chebyshev_lobatto(VALIDATION_POINTS)
        return float(np.max(np.abs(self.g_array(grid))))

    @cached_property
    def breakpoints(self) -> np.ndarray:
        """Interior kinks of the reaction (table nodes), if it declares any."""
        return np.asarray(getattr(self.reaction, "breakpoints", ()), dtype=float)

    def integrate(self, a: float, b: float, epsabs: float = QUAD_TOL, epsrel: float = 0.0) -> float:
        """int_a^b g, split at the reaction's kinks so tabulated data integrates cleanly."""
        lo, hi = min(a, b), max(a, b)
        bp = self.breakpoints
        inner = bp[(bp > lo) & (bp < hi)]
        if inner.size == 0:
            return _quad(self.g, a, b, epsabs=epsabs, epsrel=epsrel)
        edges = np.concatenate([[lo], inner, [hi]])
        total = float(np.sum(panel_integrals(self.g_array, edges)))
        return total if b >= a else -total

    def with_exponents(self, exponents: Optional[AsymptoticExponents]) -> "ProblemSpec":
        return replace(self, exponents=exponents)


def _quad(fn, a, b, epsabs=QUAD_TOL, epsrel=0.0, points=None, limit=200):
    if a == b:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(
                fn, a, b, epsabs=epsabs, epsrel=epsrel, points=points, limit=limit
            )
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"quadrature on [{a}, {b}] failed: {exc}") from exc
    if not math.isfinite(val):
        raise QuadratureFailure(f"non-finite integral on [{a}, {b}]")
    return val


def _constant(value: float) -> Callable:
    value = float(value)

    def d(r):
        if isinstance(r, np.ndarray):
            return np.full_like(r, value, dtype=float)
        return value

    return d


def build_problem(
    p: float,
    diffusion,
    reaction: Callable,
    *,
    exponents: Optional[AsymptoticExponents] = None,
    check_potential: bool = True,
    label: str = "",
) -> ProblemSpec:
    """Assemble and validate a problem.

    ``diffusion`` may be a callable or a positive number.  With
    ``check_potential=False`` the G > 0 test is skipped, which lets callers
    inspect data that violates it (e.g. to classify G(1) < 0).
    """
    p = float(p)
    if not p > 1.0:
        raise ValueError(f"p must exceed 1, got {p}")

    unit = False
    if not callable(diffusion):
        unit = float(diffusion) == 1.0
        diffusion = _constant(diffusion)

    grid = chebyshev_lobatto(VALIDATION_POINTS)
    d_vec = _as_vectorized(diffusion, grid)
    f_vec = _as_vectorized(reaction, grid)

    d_vals = d_vec(grid)
    if not np.all(np.isfinite(d_vals)) or np.min(d_vals) <= 0.0:
        raise NonPositiveDiffusion(f"diffusion has minimum {np.min(d_vals):.3g} on [-1, 1]")
    if not unit and np.all(d_vals == 1.0):
        unit = True

    k = 1.0 / (p - 1.0)
    if unit:
        g_vec = f_vec
    else:
        g_vec = lambda r: d_vec(r) ** k * f_vec(r)  # noqa: E731

    g_vals = g_vec(grid)
    if not np.all(np.isfinite(g_vals)):
        raise SignStructureViolation("reaction is not finite on [-1, 1]")
    scale = max(1.0, float(np.max(np.abs(g_vals))))
    if abs(g_vals[0]) > ROUNDOFF * scale or abs(g_vals[-1]) > ROUNDOFF * scale:
        raise SignStructureViolation(
            f"g(-1) = {g_vals[0]:.3g}, g(1) = {g_vals[-1]:.3g}; both must vanish"
        )

    s0 = _locate_sign_change(g_vec, grid, g_vals)

    spec = ProblemSpec(
        p=p,
        diffusion=diffusion,
        reaction=reaction,
        s0=s0,
        exponents=exponents,
        unit_diffusion=unit,
        label=label,
        _g_vec=g_vec,
        _d_vec=d_vec,
    )

    if check_potential:
        G = cumulative_potential(spec, grid)
        bad = (G[1:-1] <= 0.0) & (np.abs(G[1:-1]) > ROUNDOFF)
        if np.any(bad):
            r_bad = grid[1:-1][bad][0]
            raise HypothesisGFails(f"G(r) <= 0 at r = {r_bad:.6g}")
    return spec


def _locate_sign_change(g_vec, grid, g_vals) -> float:
    interior = g_vals[1:-1]
    signs = np.where(np.abs(interior) > ROUNDOFF, np.sign(interior), 0.0)
    nz = np.flatnonzero(signs)
    if nz.size == 0:
        raise SignStructureViolation("g vanishes on the whole validation grid")
    seq = signs[nz]
    flips = np.flatnonzero(np.diff(seq) != 0)
    if seq[0] < 0 or seq[-1] > 0 or flips.size != 1:
        raise SignStructureViolation(
            f"g must be positive then negative with one sign change; found {flips.size} "
            f"change(s), first sign {seq[0]:+.0f}, last sign {seq[-1]:+.0f}"
        )
    i_pos = nz[flips[0]] + 1
    i_neg = nz[flips[0] + 1] + 1
    lo, hi = float(grid[i_pos]), float(grid[i_neg])
    while hi - lo > S0_TOL:
        mid = 0.5 * (lo + hi)
        if float(g_vec(np.array([mid]))[0]) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cumulative_potential(spec: ProblemSpec, grid: np.ndarray) -> np.ndarray:
    """G on an ascending grid spanning [-1, 1], by panel quadrature split at s0."""
    edges = np.union1d(np.union1d(grid, [spec.s0]), spec.breakpoints)
    G_edges = np.concatenate([[0.0], np.cumsum(panel_integrals(spec.g_array, edges))])
    return np.interp(grid, edges, G_edges)


def potential_G(spec: ProblemSpec, r: float, tol: float = QUAD_TOL) -> float:
    """G(r) by adaptive Gauss-Kronrod quadrature to absolute tolerance ``tol``."""
    r = float(r)
    if not -1.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [-1, 1], got {r}")
    if r == -1.0:
        return 0.0
    if spec.breakpoints.size:
        return spec.integrate(-1.0, r, epsabs=tol)
    points = [spec.s0] if -1.0 < spec.s0 < r else None
    return _quad(spec.g, -1.0, r, epsabs=tol, points=points)


def potential_near_end(spec: ProblemSpec, r: float) -> float:
    """G(r) with small *relative* error, integrating from the nearer endpoint.

    Only meaningful on the right half when G(1) is known (stationary case or
    when ``spec.G1`` is accurate enough for the caller).
    """
    if r <= spec.s0:
        return spec.integrate(-1.0, r, epsabs=0.0, epsrel=1e-12)
    return spec.G1 - spec.integrate(r, 1.0, epsabs=0.0, epsrel=1e-12)


def estimate_exponents(
    spec: ProblemSpec,
    window: float = 2.0**-6,
    *,
    levels: int = 15,
    threshold: float = 1e-3,
) -> AsymptoticExponents:
    """Fit the endpoint power laws of g by least squares in log-log space.

    Samples sit at distances ``window * 2**-j`` (j = 0..levels-1) from each
    endpoint.  The model is ``log|g| = log gamma0 + gamma log t + beta t``; the
    linear term absorbs the first smooth correction so the slope is not biased
    by the outer samples.  Raises PoorFit when either RMS residual exceeds
    ``threshold``.
    """
    if not 0.0 < window < 1.0:
        raise ValueError("window must lie in (0, 1)")
    t = window * 2.0 ** -np.arange(levels)

    fits = []
    for side, r in (("minus", -1.0 + t), ("plus", 1.0 - t)):
        vals = spec.g_array(r)
        sign_ok = np.all(vals > 0) if side == "minus" else np.all(vals < 0)
        if not sign_ok:
            fits.append((float("nan"), float("nan"), float("inf")))
            continue
        A = np.column_stack([np.ones_like(t), np.log(t), t])
        logg = np.log(np.abs(vals))
        coef, *_ = np.linalg.lstsq(A, logg, rcond=None)
        resid = logg - A @ coef
        fits.append((float(coef[1]), float(math.exp(coef[0])), float(np.sqrt(np.mean(resid**2)))))

    (gm, g0m, rm), (gp, g0p, rp) = fits
    ok = all(math.isfinite(v) and v > 0 for v in (gm, g0m, gp, g0p))
    if not ok or rm > threshold or rp > threshold:
        exps = None
        if ok:
            exps = AsymptoticExponents(
                gm, g0m, gp, g0p, ExponentSource.ESTIMATED, residual_minus=rm, residual_plus=rp
            )
        raise PoorFit(
            f"endpoint power-law fit unusable (residuals {rm:.3g}, {rp:.3g}; "
            f"threshold {threshold:.3g})",
            exps,
        )
    return AsymptoticExponents(
        gm, g0m, gp, g0p, ExponentSource.ESTIMATED, residual_minus=rm, residual_plus=rp
    )


def resolve_exponents(spec: ProblemSpec, window: float = 2.0**-6) -> Optional[AsymptoticExponents]:
    """Supplied exponents if present, otherwise an estimate; None if the fit is poor."""
    if spec.exponents is not None:
        return spec.exponents
    try:
        return estimate_exponents(spec, window)
    except PoorFit:
        return None
