"""Built-in reaction families.

Every family here is written with plain arithmetic so the same callable works
on Python floats (hot ODE loop) and numpy arrays (validation, quadrature).
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .problem import AsymptoticExponents, ExponentSource, ProblemSpec, build_problem


def _signed_power(w, k):
    """sign(w) * |w|**k for floats or arrays."""
    if isinstance(w, np.ndarray):
        return np.sign(w) * np.abs(w) ** k
    return math.copysign(abs(w) ** k, w) if w != 0.0 else 0.0


def alpha_bistable_reaction(alpha: float, s0: float):
    """f(s) = |1 - s^2|^(alpha-2) (1 - s^2) (s0 - s).

    alpha = 2 gives the cubic (s^2 - 1)(s - s0); s0 = 0 gives the
    double-well derivative f_alpha.
    """
    k = alpha - 1.0

    def f(s):
        return _signed_power(1.0 - s * s, k) * (s0 - s)

    return f


def cubic_reaction(s0: float):
    def f(s):
        return (s * s - 1.0) * (s - s0)

    return f


def cubic(s0: float, p: float = 2.0, diffusion=1.0) -> ProblemSpec:
    """f(s) = (s^2 - 1)(s - s0); G(1) = 4 s0 / 3 with unit diffusion."""
    exps = None
    if diffusion == 1.0 and -1.0 < s0 < 1.0:
        exps = AsymptoticExponents(1.0, 2.0 * (1.0 + s0), 1.0, 2.0 * (1.0 - s0))
    return build_problem(p, diffusion, cubic_reaction(s0), exponents=exps,
                         label=f"cubic(s0={s0:g})")


def double_well(alpha: float, p: float = 2.0, diffusion=1.0) -> ProblemSpec:
    """f = F_alpha' with F_alpha(s) = |s^2 - 1|^alpha / (2 alpha); s0 = 0."""
    return alpha_bistable(alpha, 0.0, p=p, diffusion=diffusion)


def alpha_bistable(alpha: float, s0: float, p: float = 2.0, diffusion=1.0) -> ProblemSpec:
    if not alpha > 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    exps = None
    if diffusion == 1.0 and -1.0 < s0 < 1.0:
        c = 2.0 ** (alpha - 1.0)
        exps = AsymptoticExponents(alpha - 1.0, c * (1.0 + s0), alpha - 1.0, c * (1.0 - s0))
    label = f"double_well(alpha={alpha:g})" if s0 == 0.0 else f"alpha_bistable(alpha={alpha:g}, s0={s0:g})"
    return build_problem(p, diffusion, alpha_bistable_reaction(alpha, s0),
                         exponents=exps, label=label)


class TabulatedReaction:
    """Monotone piecewise-cubic (PCHIP) interpolant of tabulated g values.

    The first and last table intervals are interpolated linearly so the
    interpolant cannot overshoot the sign of g next to the endpoints.
    """

    def __init__(self, s, g):
        s = np.asarray(s, dtype=float)
        g = np.asarray(g, dtype=float)
        if s.ndim != 1 or s.shape != g.shape or s.size < 4:
            raise ValueError("table needs matching 1-D columns with at least 4 rows")
        if np.any(np.diff(s) <= 0):
            raise ValueError("table abscissae must be strictly increasing")
        if s[0] != -1.0 or s[-1] != 1.0:
            raise ValueError("table must cover [-1, 1] including both endpoints")
        self.s = s
        self.values = g
        self._pchip = PchipInterpolator(s, g, extrapolate=True)
        self.breakpoints = s[1:-1]
        self._lo = float(s[1])
        self._hi = float(s[-2])

    def __call__(self, r):
        if isinstance(r, np.ndarray):
            out = self._pchip(r)
            edge = (r < self._lo) | (r > self._hi)
            if np.any(edge):
                out[edge] = np.interp(r[edge], self.s, self.values)
            return out
        if r < self._lo or r > self._hi:
            return float(np.interp(r, self.s, self.values))
        return float(self._pchip(r))


def read_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a CSV with header ``s,g``."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["s", "g"]:
            raise ValueError(f"{path}: expected header 's,g', got {reader.fieldnames}")
        rows = [(float(row["s"]), float(row["g"])) for row in reader]
    arr = np.array(rows, dtype=float)
    return arr[:, 0], arr[:, 1]


def tabulated(path, p: float = 2.0, exponents: Optional[AsymptoticExponents] = None) -> ProblemSpec:
    s, g = read_table(path)
    return build_problem(p, 1.0, TabulatedReaction(s, g), exponents=exponents,
                         label=f"tabulated({Path(path).name})")


def user_exponents(gamma_minus, gamma0_minus, gamma_plus, gamma0_plus) -> AsymptoticExponents:
    return AsymptoticExponents(
        float(gamma_minus), float(gamma0_minus), float(gamma_plus), float(gamma0_plus),
        ExponentSource.USER_SUPPLIED,
    )
