"""Acceptance criteria, one test and one printed PASS/FAIL line per criterion.

Run ``python3 tests/test_acceptance.py`` for the summary lines alone.
"""

from __future__ import annotations

import functools
import math
import sys
import time

import numpy as np
import pytest
from scipy import integrate

from travelwave import (
    Branch,
    Interface,
    alpha_bistable,
    classify_interfaces,
    cubic,
    double_well,
    reconstruct,
    solve_cstar,
    user_exponents,
)
from travelwave.harness import (
    MANUFACTURED_KAPPA,
    ManufacturedProblem,
    check_envelopes,
    check_forward_comparison,
    check_uniqueness_probe,
    fd_residual,
    manufactured_admissible,
    manufactured_matrix,
    manufactured_problem,
)

SQRT2 = math.sqrt(2.0)
TOL_C = 1e-10
TOL_ODE = 1e-10


def announce(number: int, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    capture = _capture_manager()
    if capture is None:
        print(line)
    else:
        with capture.global_and_fixture_disabled():
            print("\n" + line)


def _capture_manager():
    return getattr(announce, "capture", None)


@pytest.fixture(autouse=True)
def _uncaptured(request):
    announce.capture = request.config.pluginmanager.getplugin("capturemanager")
    yield
    announce.capture = None


# ---------------------------------------------------------------- shared solves


@functools.lru_cache(maxsize=None)
def solved_cubic(s0: float, p: float = 2.0):
    spec = cubic(s0, p=p)
    t = time.perf_counter()
    result = solve_cstar(spec, TOL_C, TOL_ODE)
    profile = reconstruct(spec, result)
    return spec, result, profile, time.perf_counter() - t


@functools.lru_cache(maxsize=None)
def solved_double_well(alpha: float):
    spec = double_well(alpha)
    result = solve_cstar(spec, TOL_C, TOL_ODE)
    return spec, result, reconstruct(spec, result)


@functools.lru_cache(maxsize=None)
def manufactured_solves():
    """[(params, ManufacturedProblem, CStarResult)] for the admissible matrix instances."""
    out = []
    for params, mp in manufactured_matrix():
        if isinstance(mp, ManufacturedProblem):
            out.append((params, mp, solve_cstar(mp.spec, TOL_C, TOL_ODE)))
    return out


def width_oracle(alpha: float) -> float:
    return integrate.quad(lambda u: math.sqrt(alpha), -1, 1, weight="alg",
                          wvar=(-alpha / 2, -alpha / 2), epsabs=1e-13)[0]


# ---------------------------------------------------------------- criteria


def test_criterion_1_closed_form_cubic():
    r = np.concatenate([np.linspace(-1, 1, 20001), -1 + np.geomspace(1e-12, 1e-2, 200),
                        1 - np.geomspace(1e-12, 1e-2, 200)])
    worst = {"c": 0.0, "y": 0.0, "u": 0.0, "t": 0.0}
    for s0 in (0.15, 0.3, 0.45):
        solved_cubic.cache_clear()
        _, res, prof, elapsed = solved_cubic(s0)
        worst["c"] = max(worst["c"], abs(res.c_star + SQRT2 * s0))
        worst["y"] = max(worst["y"], float(np.max(np.abs(res.profile(r) - (1 - r**2) ** 2 / 2))))
        worst["u"] = max(worst["u"], float(np.max(np.abs(prof.u + np.tanh(prof.xi / SQRT2)))))
        worst["t"] = max(worst["t"], elapsed)
    ok = worst["c"] <= 1e-7 and worst["y"] <= 1e-7 and worst["u"] <= 1e-5 and worst["t"] <= 1.0
    announce(1, ok, "cubic s0 in {0.15,0.3,0.45}: |dc| = %.2e, |dy| = %.2e, |dU| = %.2e, "
             "max time %.3f s" % (worst["c"], worst["y"], worst["u"], worst["t"]))
    assert ok


def test_criterion_2_stationary_branch():
    r = np.linspace(-1, 1, 20001)
    lines, ok = [], True
    for alpha in (1.2, 1.5, 1.8):
        spec, res, prof = solved_double_well(alpha)
        y_err = float(np.max(np.abs(res.profile(r) - (1 - r**2) ** alpha / alpha)))
        width_rel = abs(prof.width / width_oracle(alpha) - 1.0)
        finite = prof.classes.left is Interface.FINITE and prof.classes.right is Interface.FINITE
        this = (res.branch is Branch.STATIONARY and res.c_star == 0.0 and y_err <= 1e-8
                and finite and width_rel <= 1e-4)
        ok &= this
        lines.append("alpha=%g |dy| = %.1e width rel %.1e" % (alpha, y_err, width_rel))
    announce(2, ok, "stationary, c*=0, Finite/Finite; " + "; ".join(lines))
    assert ok


CLASS_TABLE = [
    (2.0, 0.5, Interface.FINITE),
    (2.0, 1.0, Interface.INFINITE),
    (1.5, 0.4, Interface.FINITE),
    (1.5, 0.6, Interface.INFINITE),
    (3.0, 2.5, Interface.INFINITE),
    (3.0, 1.0, Interface.UNDETERMINED),
]


def test_criterion_3_interface_rule():
    got = []
    for p, gamma, want in CLASS_TABLE:
        cls = classify_interfaces(user_exponents(gamma, 1.0, gamma, 1.0), p)
        got.append(cls.left is want and cls.right is want)
    announce(3, all(got), "%d/%d table rows match exactly" % (sum(got), len(got)))
    assert all(got)


def test_criterion_4_manufactured_matrix():
    manufactured_solves.cache_clear()
    t = time.perf_counter()
    solves = manufactured_solves()
    c_err = y_err = 0.0
    r = np.linspace(-1, 1, 4001)
    for (_, _, _, c), mp, res in solves:
        c_err = max(c_err, abs(res.c_star - c))
        y_err = max(y_err, float(np.max(np.abs(res.profile(r) - mp.y_target(r)))))
    elapsed = time.perf_counter() - t
    rejected = [(p, a, b, c) for (p, a, b, c), mp in manufactured_matrix()
                if not isinstance(mp, ManufacturedProblem)]
    provable = all(not manufactured_admissible(MANUFACTURED_KAPPA, a, b, c, p)
                   for p, a, b, c in rejected)
    ok = (len(solves) + len(rejected) == 12 and c_err <= 1e-8 and y_err <= 1e-6
          and elapsed <= 30.0 and provable)
    announce(4, ok, "%d admissible instances recovered (|dc| = %.1e, |dy| = %.1e) in %.1f s; "
             "%d rejected, all provably outside the valid sign structure"
             % (len(solves), c_err, y_err, elapsed, len(rejected)))
    assert ok


def test_criterion_5_forward_comparison():
    rng = np.random.default_rng(20240601)
    failures, worst = 0, math.inf
    for _ in range(100):
        s0 = float(rng.uniform(0.05, 0.6))
        c1, c2 = sorted(rng.uniform(-2.5, 0.0, 2))
        rep = check_forward_comparison(cubic(s0), float(c1), float(c2), TOL_ODE)
        failures += not rep.passed
        worst = min(worst, rep.margin)
    ok = failures == 0
    announce(5, ok, "100 random cubic pairs, %d violations, smallest margin %.2e"
             % (failures, worst))
    assert ok


def envelope_instances():
    out = []
    for s0 in (0.15, 0.3, 0.45):
        spec, res, _, _ = solved_cubic(s0)
        out.append((spec.label, spec, res))
    for alpha in (1.2, 1.5, 1.8):
        spec, res, _ = solved_double_well(alpha)
        out.append((spec.label, spec, res))
    for params, mp, res in manufactured_solves():
        out.append(("manufactured%s" % (params,), mp.spec, res))
    upper = manufactured_problem(2.0, 3.3, 2.0, -0.5, 1.5)
    out.append(("manufactured(a=3.3, p=1.5)", upper.spec, solve_cstar(upper.spec, TOL_C, TOL_ODE)))
    return out


def test_criterion_6_envelopes():
    results = []
    for label, spec, res in envelope_instances():
        rep = check_envelopes(spec, res, rho=0.05, tol=TOL_ODE)
        results.append((label, rep.passed, rep.context["two_sided"]))
    ok = all(passed for _, passed, _ in results)
    two = sum(t for _, _, t in results)
    announce(6, ok, "%d/%d instances inside their envelopes on (-1, -0.95) "
             "(%d two-sided, %d upper-only)"
             % (sum(p for _, p, _ in results), len(results), two, len(results) - two))
    assert ok, [r for r in results if not r[1]]


def closed_form_profiles():
    for s0 in (0.15, 0.3, 0.45):
        spec, res, _, _ = solved_cubic(s0)
        yield spec, res
    for alpha in (1.2, 1.5, 1.8, 2.0):
        spec, res, _ = solved_double_well(alpha)
        yield spec, res


def test_criterion_7_residual_convergence():
    ratios4, ratios2 = [], []
    for spec, res in closed_form_profiles():
        r4 = [fd_residual(spec, pr.xi, pr.u, res.c_star, order=4)
              for pr in (reconstruct(spec, res, n=n) for n in (512, 1024))]
        r2 = [fd_residual(spec, pr.xi, pr.u, res.c_star, order=2)
              for pr in (reconstruct(spec, res, n=n) for n in (2048, 4096))]
        ratios4.append(r4[0] / r4[1])
        ratios2.append(r2[0] / r2[1])
    ok = min(ratios4) >= 4.0
    announce(7, ok, "fourth-order residual ratio n=512->1024 over %d closed-form profiles: "
             "min %.2f (second-order stencil, n=2048->4096: %.3f to %.3f)"
             % (len(ratios4), min(ratios4), min(ratios2), max(ratios2)))
    assert ok


def travelling_instances():
    for s0 in (0.15, 0.3, 0.45):
        spec, res, _, _ = solved_cubic(s0)
        yield spec.label, spec, res
    for p in (1.5, 3.0):
        spec, res, _, _ = solved_cubic(0.3, p)
        yield spec.label + " p=%g" % p, spec, res
    spec = alpha_bistable(3.5, 0.3, p=3.0)
    yield spec.label + " p=3", spec, solve_cstar(spec, TOL_C, TOL_ODE)
    for params, mp, res in manufactured_solves():
        yield "manufactured%s" % (params,), mp.spec, res


def test_criterion_8_uniqueness_probes():
    results = [(label, check_uniqueness_probe(spec, res, TOL_C, TOL_ODE).passed)
               for label, spec, res in travelling_instances()]
    ok = all(p for _, p in results)
    announce(8, ok, "c* -/+ 10 tol_c gives Undershoot/Overshoot on %d/%d travelling-wave instances"
             % (sum(p for _, p in results), len(results)))
    assert ok, [r for r in results if not r[1]]


if __name__ == "__main__":
    status = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                status = 1
    sys.exit(status)
