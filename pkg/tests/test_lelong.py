import math

import numpy as np
import pytest

from greenlab.lelong import iterate_point, lelong_estimate, lelong_pullback_comparison, local_degree
from greenlab.poly import make_power_map
from greenlab.projective import point
from greenlab.pullback import coordinate_hyperplane, potential_function


def _log_coord(j, s=1.0):
    return lambda W: s * np.log(np.abs(np.atleast_2d(W)[:, j]))


def test_slope_of_log_distance():
    # at [0:1] the sup of log|z0| over B(r) is log sin r, so the slope tends to 1
    est = lelong_estimate(_log_coord(0), point(0, 1), r_max=0.1, levels=8, samples_per_radius=1000)
    sup_oracle = np.log(np.sin(est.radii))
    assert np.max(np.abs(est.sups - sup_oracle)) < 1e-3
    assert abs(est.slope - 1) < 0.02
    assert est.r_squared > 0.99


def test_slope_scales_with_multiplicity():
    est = lelong_estimate(_log_coord(0, 3.0), point(0, 1, 0), samples_per_radius=1000)
    assert abs(est.slope - 3) < 0.1


def test_zero_off_the_pole():
    est = lelong_estimate(_log_coord(0), point(1, 1), samples_per_radius=1000)
    assert abs(est.slope) < 0.05
    assert est.convexity_ok()


def test_rejection_rates_reported():
    est = lelong_estimate(_log_coord(0), point(0, 1), levels=4, samples_per_radius=500)
    assert len(est.rejection_rates) == 4
    assert all(0 <= r < 1 for r in est.rejection_rates)


@pytest.mark.parametrize("kw", [dict(r_max=0.5), dict(r_max=0.0), dict(levels=3), dict(samples_per_radius=100)])
def test_validation(kw):
    with pytest.raises(ValueError):
        lelong_estimate(_log_coord(0), point(0, 1), **kw)


def test_potential_from_pullback():
    F = make_power_map(1, 2)
    u = potential_function(coordinate_hyperplane(1, 0), F)
    est = lelong_estimate(u, point(0, 1), samples_per_radius=1000)
    assert abs(est.slope - 1) < 0.1


def test_local_degree_power_map():
    F = make_power_map(1, 2)
    assert local_degree(F, point(0, 1), 1) == 2
    assert local_degree(F, point(0, 1), 3) == 8
    assert local_degree(F, point(1, 0.5), 1) == 1


def test_iterate_point():
    z = iterate_point(make_power_map(1, 2), np.array([1, 0.5]) / math.hypot(1, 0.5), 2)
    w = np.array([1, 0.5**4])
    assert np.allclose(z, w / np.linalg.norm(w))


def test_comparison_sandwich():
    F = make_power_map(1, 2)
    c = lelong_pullback_comparison(coordinate_hyperplane(1, 0), F, point(0, 1), n=1, samples_per_radius=1000)
    assert c.local_degree == 2
    assert abs(c.nu_downstairs - 1) < 0.1
    assert abs(c.nu_upstairs - 2) < 0.2
    assert abs(c.nu_upstairs_normalized - 1) < 0.1
    assert c.sandwich_holds and not c.inconclusive
