import logging
import math

import numpy as np
import pytest

from travelwave import Branch, bracket, build_problem, cubic, double_well, solve_cstar
from travelwave.errors import NegativeG1
from travelwave.shooter import OutcomeKind, shoot
from travelwave.speed import a_priori_cap, classify_branch, graded_grid


@pytest.mark.parametrize("s0", [0.15, 0.3, 0.45])
def test_cubic_speed(s0):
    res = solve_cstar(cubic(s0))
    assert res.branch is Branch.TRAVELLING_WAVE
    assert res.c_star == pytest.approx(-math.sqrt(2) * s0, abs=1e-8)
    assert res.profile.outcome.kind is OutcomeKind.CONVERGED
    assert res.terminal_residual < 1e-8


def test_double_well_is_stationary():
    res = solve_cstar(double_well(1.5))
    assert res.branch is Branch.STATIONARY
    assert res.c_star == 0.0
    r = np.linspace(-1, 1, 4001)
    assert np.max(np.abs(res.profile(r) - (1 - r**2) ** 1.5 / 1.5)) < 1e-12


def test_branch_classification(cubic_spec):
    assert classify_branch(cubic_spec) is Branch.TRAVELLING_WAVE
    assert classify_branch(double_well(1.5)) is Branch.STATIONARY


def test_mirrored_cubic_has_negative_potential():
    spec = build_problem(2.0, 1.0, lambda s: (s * s - 1) * (s + 0.3), check_potential=False)
    with pytest.raises(NegativeG1):
        classify_branch(spec)


def test_barely_positive_potential_warns(caplog):
    spec = build_problem(2.0, 1.0, lambda s: (s * s - 1) * (s - 1e-13), check_potential=False)
    with caplog.at_level(logging.WARNING):
        classify_branch(spec, tol=1e-14)
    assert "barely positive" in caplog.text


def test_bracket(cubic_spec):
    hist = []
    lo, hi = bracket(cubic_spec, history=hist)
    assert (lo, hi) == (-1.0, 0.0)
    assert shoot(cubic_spec, lo, boundary_tol=0.0).outcome.kind is OutcomeKind.UNDERSHOOT
    assert hist[-1].phase == "descent"
    with pytest.raises(ValueError):
        bracket(double_well(1.5))


def test_a_priori_cap(cubic_spec):
    G = 0.3**4 / 4 - 0.1 * 0.3**3 - 0.3**2 / 2 + 0.09 - (0.25 + 0.1 - 0.5 - 0.3)
    assert a_priori_cap(cubic_spec) == pytest.approx(math.sqrt(2 * G) / 0.7, rel=1e-10)
    assert a_priori_cap(cubic_spec) > math.sqrt(2) * 0.3


def test_bisection_history_is_consistent(cubic_solved):
    _, res, _ = cubic_solved
    steps = [h for h in res.bracket_history if h.phase == "bisect"]
    assert len(steps) == res.iterations
    widths = [h.c_hi - h.c_lo for h in steps]
    assert all(b < a for a, b in zip(widths, widths[1:]))
    assert widths[-1] < 1e-10
    assert steps[-1].as_tuple()[2] in {"Undershoot", "Overshoot", "Converged"}


def test_summary_keys(cubic_solved):
    _, res, _ = cubic_solved
    assert set(res.summary()) == {"c_star", "branch", "terminal_residual", "iterations",
                                  "a_priori_cap"}


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_other_p_speed_bounded_by_cap(p):
    spec = cubic(0.3, p=p)
    res = solve_cstar(spec)
    assert -a_priori_cap(spec) < res.c_star < 0


def test_graded_grid_clusters_at_ends():
    g = graded_grid(0.3)
    assert g[0] == -1.0 and g[-1] == 1.0
    assert np.all(np.diff(g) > 0)
    assert g[1] + 1.0 < 1e-11
    assert 0.3 in g
