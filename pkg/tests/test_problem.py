import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from travelwave import build_problem, cubic, double_well, estimate_exponents
from travelwave.errors import (
    HypothesisGFails,
    NonPositiveDiffusion,
    PoorFit,
    SignStructureViolation,
)
from travelwave.problem import (
    ExponentSource,
    cumulative_potential,
    panel_integrals,
    potential_G,
    resolve_exponents,
)


def cubic_G(r, s0):
    # antiderivative of (s^2 - 1)(s - s0) from -1
    F = lambda x: x**4 / 4 - s0 * x**3 / 3 - x**2 / 2 + s0 * x  # noqa: E731
    return F(r) - F(-1.0)


def test_cubic_spec_basics(cubic_spec):
    assert cubic_spec.s0 == pytest.approx(0.3, abs=1e-12)
    assert cubic_spec.G1 == pytest.approx(0.4, abs=1e-13)
    assert cubic_spec.p_conj == 2.0


def test_unit_diffusion_leaves_g_equal_to_f():
    spec = cubic(0.3, p=3.0)
    r = np.linspace(-1, 1, 11)
    assert np.allclose(spec.g_array(r), (r**2 - 1) * (r - 0.3), atol=1e-15)


def test_double_well_is_balanced():
    spec = double_well(1.5)
    assert spec.s0 == pytest.approx(0.0, abs=1e-12)
    assert abs(spec.G1) < 1e-13


def test_potential_values(cubic_spec):
    assert potential_G(cubic_spec, -1.0) == 0.0
    assert potential_G(cubic_spec, 1.0) == pytest.approx(0.4, abs=1e-12)
    assert potential_G(double_well(1.5), 0.0) == pytest.approx(1.0 / 3.0, abs=1e-12)
    with pytest.raises(ValueError):
        potential_G(cubic_spec, 1.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.6), st.floats(-0.999, 0.999))
def test_potential_matches_antiderivative(s0, r):
    spec = cubic(s0)
    assert potential_G(spec, r) == pytest.approx(cubic_G(r, s0), abs=1e-11)


def test_cumulative_potential_matches_closed_form(cubic_spec):
    grid = np.linspace(-1, 1, 101)
    assert np.allclose(cumulative_potential(cubic_spec, grid), cubic_G(grid, 0.3), atol=1e-14)


def test_panel_integrals_are_exact_for_polynomials():
    edges = np.linspace(0.0, 1.0, 4)
    vals = panel_integrals(lambda x: x**7, edges)
    assert vals.sum() == pytest.approx(1.0 / 8.0, abs=1e-15)


def test_nonpositive_diffusion_rejected():
    with pytest.raises(NonPositiveDiffusion):
        build_problem(2.0, lambda r: r, lambda s: (s * s - 1) * (s - 0.3))


def test_two_sign_changes_rejected():
    with pytest.raises(SignStructureViolation):
        build_problem(2.0, 1.0, lambda s: (1 - s * s) * (s + 0.5) * (s - 0.5))


def test_nonpositive_potential_rejected():
    # G dips below zero before the sign change can compensate
    with pytest.raises((HypothesisGFails, SignStructureViolation)):
        build_problem(2.0, 1.0, lambda s: (s * s - 1) * (s + 0.3))


def test_p_must_exceed_one():
    with pytest.raises(ValueError):
        build_problem(1.0, 1.0, lambda s: (s * s - 1) * (s - 0.3))


def test_estimated_exponents_for_cubic():
    spec = build_problem(2.0, 1.0, lambda s: (s * s - 1) * (s - 0.3))
    ex = estimate_exponents(spec)
    assert ex.source is ExponentSource.ESTIMATED
    assert ex.gamma_minus == pytest.approx(1.0, abs=1e-4)
    assert ex.gamma0_minus == pytest.approx(2.6, rel=1e-4)
    assert ex.gamma_plus == pytest.approx(1.0, abs=1e-4)
    assert ex.gamma0_plus == pytest.approx(1.4, rel=1e-4)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_estimated_exponents_for_double_well(alpha):
    spec = double_well(alpha).with_exponents(None)
    ex = estimate_exponents(spec)
    assert ex.gamma_minus == pytest.approx(alpha - 1.0, abs=1e-4)
    assert ex.gamma_plus == pytest.approx(alpha - 1.0, abs=1e-4)


def test_poor_fit_on_noisy_reaction():
    rng = np.random.default_rng(3)
    wiggle = dict(zip(range(64), rng.uniform(0.8, 1.2, 64)))

    def f(s):
        k = int(abs(math.log2(max(1.0 - abs(s), 1e-30)))) % 64
        return (s * s - 1) * (s - 0.3) * wiggle[k]

    spec = build_problem(2.0, 1.0, f, check_potential=False)
    with pytest.raises(PoorFit):
        estimate_exponents(spec)
    assert resolve_exponents(spec) is None
