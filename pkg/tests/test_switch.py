"""Tests for the C¹ cubic switch."""

import numpy as np
import pytest

from hsctrl.core.exceptions import ConfigError
from hsctrl.models.switch import eval_switch, make_switch


def solve_cubic(upper: float, lower: float) -> np.ndarray:
    """Coefficients (a0..a3) from the four boundary conditions by linear solve"""
    rows = [
        [1.0, upper, upper**2, upper**3],
        [1.0, lower, lower**2, lower**3],
        [0.0, 1.0, 2.0 * upper, 3.0 * upper**2],
        [0.0, 1.0, 2.0 * lower, 3.0 * lower**2],
    ]
    return np.linalg.solve(np.array(rows), np.array([0.0, 1.0, 0.0, 0.0]))


def test_unit_interval_coefficients():
    """Breaks (1, 0) give the smoothstep 1 - 3chi^2 + 2chi^3."""
    s = make_switch(1.0, 0.0)
    assert s.coeffs == pytest.approx((1.0, 0.0, -3.0, 2.0))
    assert eval_switch(s, 0.5) == pytest.approx(0.5)


@pytest.mark.parametrize("upper,lower", [(0.5, 0.0), (0.0, -10.0), (0.0, -40.0), (3.2, -1.7)])
def test_coefficients_match_linear_solve(upper, lower):
    """Closed-form coefficients agree with the boundary-condition system."""
    s = make_switch(upper, lower)
    assert np.allclose(s.coeffs, solve_cubic(upper, lower), rtol=1e-9, atol=1e-12)


def test_saturation_outside_breaks():
    """1 below the lower break and 0 above the upper break."""
    s = make_switch(0.5, 0.0)
    assert eval_switch(s, -3.0) == 1.0
    assert eval_switch(s, 7.0) == 0.0
    assert s(0.5) == pytest.approx(0.0, abs=1e-15)
    assert s(0.0) == pytest.approx(1.0)


def random_breaks(rng, count: int = 1000):
    """Seeded (upper, lower) pairs with widths between 0.5 and 40"""
    lower = rng.uniform(-40.0, 10.0, size=count)
    width = rng.uniform(0.5, 40.0, size=count)
    return list(zip(lower + width, lower))


def test_switch_is_c1_at_breaks():
    """The derivative vanishes on both sides of each break."""
    s = make_switch(0.0, -10.0)
    for chi in (0.0, -10.0):
        assert s.derivative(chi) == pytest.approx(0.0, abs=1e-12)
        assert s.derivative(chi + 1e-9) == pytest.approx(0.0, abs=1e-6)
        assert s.derivative(chi - 1e-9) == pytest.approx(0.0, abs=1e-6)


def test_switch_c1_for_random_breaks(rng):
    """Across 1000 break pairs the cubic meets 0 and 1 with zero slope at the breaks."""
    for upper, lower in random_breaks(rng):
        s = make_switch(upper, lower)
        assert abs(s.derivative(upper)) <= 1e-8
        assert abs(s.derivative(lower)) <= 1e-8
        assert abs(s(upper) - 0.0) <= 1e-8
        assert abs(s(lower) - 1.0) <= 1e-8


def test_switch_has_no_value_jump_at_breaks(rng):
    """Stepping 1e-5 across either break changes phi by less than 1e-8."""
    eps = 1e-5
    for upper, lower in random_breaks(rng):
        s = make_switch(upper, lower)
        assert abs(s(upper + eps) - s(upper - eps)) <= 1e-8
        assert abs(s(lower + eps) - s(lower - eps)) <= 1e-8


def test_random_coefficients_match_linear_solve(rng):
    """The closed form and the boundary-condition system give the same cubic on 1000 intervals."""
    lowers = rng.uniform(-5.0, 5.0, size=1000)
    widths = rng.uniform(1.0, 10.0, size=1000)
    for upper, lower in zip(lowers + widths, lowers):
        s = make_switch(upper, lower)
        oracle = solve_cubic(upper, lower)
        for chi in np.linspace(lower, upper, 5):
            expected = oracle[0] + oracle[1] * chi + oracle[2] * chi**2 + oracle[3] * chi**3
            assert s(chi) == pytest.approx(expected, abs=1e-8)


def test_switch_monotone_and_bounded(rng):
    """Values stay in [0, 1] and never increase with chi."""
    s = make_switch(0.5, 0.0)
    chis = np.sort(rng.uniform(-1.0, 1.5, size=1000))
    values = np.array([s(c) for c in chis])
    assert np.all((values >= 0.0) & (values <= 1.0))
    assert np.all(np.diff(values) <= 1e-15)


def test_reversed_breaks_rejected():
    """The upper break must exceed the lower one."""
    with pytest.raises(ConfigError, match="must exceed"):
        make_switch(0.0, 0.5)
