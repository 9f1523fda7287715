"""Harvester model: derived constants, the sigmoid, and its exact inverse.

Frozen reference values were computed independently with 50-digit decimal
arithmetic (Taylor exp/ln), not by running the code under test.
"""

import numpy as np
import pytest

from irswet.eh import (
    EhParams,
    InfeasibleTargetError,
    dc_power,
    derive_constants,
    per_er,
    required_rf_power,
)

# 50-digit decimal evaluations of x = m(1+e^{ab})/e^{ab}, y = m/e^{ab},
# and x/2 - y at (a, b, m) = (150, 0.014, 0.024)
X_REF = 0.026938954278071566
Y_REF = 0.0029389542780715658
DC_AT_B_REF = 0.010530522860964217
RF_AT_99M_REF = 0.04541160503109373


def test_derived_constants_match_frozen_reference(eh_default):
    assert eh_default.x == pytest.approx(X_REF, rel=1e-14)
    assert eh_default.y == pytest.approx(Y_REF, rel=1e-14)


def test_x_minus_y_equals_m_identity():
    for a, b, m in [(150.0, 0.014, 0.024), (20.0, 0.1, 0.5), (3.0, 1.0, 2.0)]:
        p = derive_constants(a, b, m)
        assert p.x - p.y == pytest.approx(m, rel=1e-12)
        assert p.x > p.y > 0


def test_small_center_limit_direction():
    p = derive_constants(150.0, 1e-12, 0.024)
    assert p.y == pytest.approx(0.024, rel=1e-6)
    assert p.x == pytest.approx(0.048, rel=1e-6)


@pytest.mark.parametrize("a,b,m", [(0.0, 0.014, 0.024), (150.0, -1.0, 0.024),
                                   (150.0, 0.014, 0.0), (-5.0, 0.014, 0.024)])
def test_nonpositive_parameters_rejected(a, b, m):
    with pytest.raises(ValueError):
        derive_constants(a, b, m)


def test_zero_input_harvests_zero(eh_default):
    assert abs(dc_power(eh_default, 0.0)) <= 1e-12


def test_center_point_matches_frozen_reference(eh_default):
    assert dc_power(eh_default, 0.014) == pytest.approx(DC_AT_B_REF, rel=1e-14)


def test_saturation_at_high_power(eh_default):
    assert abs(dc_power(eh_default, 10.0) - 0.024) <= 1e-9


def test_negative_input_rejected(eh_default):
    with pytest.raises(ValueError):
        dc_power(eh_default, -1e-9)


def test_strictly_increasing_and_in_range(eh_default):
    # beyond ~0.23 W the true increments of the sigmoid fall under the
    # float64 spacing at m, so strictness is asserted below saturation and
    # monotone non-decrease everywhere
    grid = np.linspace(0.0, 1.0, 10_000)
    vals = dc_power(eh_default, grid)
    assert np.all(np.diff(vals) >= 0)
    unsaturated = vals < eh_default.m * (1 - 1e-9)
    strict = np.diff(vals[unsaturated])
    assert strict.size > 1000 and np.all(strict > 0)
    assert vals[0] >= 0.0
    assert np.all(vals < eh_default.m)


def test_inverse_at_zero_is_exactly_zero(eh_default):
    assert required_rf_power(eh_default, 0.0) == pytest.approx(0.0, abs=1e-15)


def test_inverse_at_midpoint_is_center(eh_default):
    phi_mid = eh_default.x / 2 - eh_default.y
    assert required_rf_power(eh_default, phi_mid) == pytest.approx(0.014, rel=1e-12)


def test_inverse_near_saturation_against_bisection_oracle(eh_default):
    phi = 0.99 * eh_default.m
    p = required_rf_power(eh_default, phi)
    assert p == pytest.approx(RF_AT_99M_REF, rel=1e-12)
    # independent route: bisect the forward model
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if dc_power(eh_default, mid) < phi:
            lo = mid
        else:
            hi = mid
    assert p == pytest.approx(0.5 * (lo + hi), rel=1e-10)
    assert p > 0


def test_inverse_round_trip_ten_thousand_targets(eh_default):
    rng = np.random.Generator(np.random.Philox(2024))
    phis = rng.uniform(0.0, 0.999 * eh_default.m, size=10_000)
    back = np.array([dc_power(eh_default, required_rf_power(eh_default, phi))
                     for phi in phis])
    assert np.max(np.abs(back - phis)) <= 1e-9 * eh_default.m


def test_targets_at_or_above_saturation_rejected(eh_default):
    with pytest.raises(InfeasibleTargetError):
        required_rf_power(eh_default, eh_default.m)
    with pytest.raises(InfeasibleTargetError):
        required_rf_power(eh_default, eh_default.m * 1.5)
    with pytest.raises(ValueError):
        required_rf_power(eh_default, -1e-12)


def test_per_er_broadcast_and_passthrough(eh_default):
    lst = per_er(eh_default, 3)
    assert len(lst) == 3 and all(p is eh_default for p in lst)
    pair = (eh_default, derive_constants(20.0, 0.1, 0.5))
    assert per_er(pair, 2) == list(pair)
    with pytest.raises(ValueError):
        per_er(pair, 3)


def test_params_are_immutable(eh_default):
    with pytest.raises(AttributeError):
        eh_default.a = 1.0
    assert isinstance(eh_default, EhParams)
