import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greenlab.green import (N_MAX, OrbitAccumulator, estimate_c_bound, green_grid, green_lift, green_lift_batch,
                            green_potential, henon_green_plus, henon_green_plus_batch, steps_for_tol, tail_bound)
from greenlab.poly import make_henon, make_perturbed_power_map, make_power_map, make_ueda_map
from greenlab.projective import point, sample_fs_uniform
from greenlab.pullback import sample_annulus


def _mp_green(F, z, n=45):
    """Oracle: d^-n log||F^n(z)|| in arbitrary-exponent arithmetic, no renormalization."""
    mpmath.mp.dps = 40
    w = [mpmath.mpc(complex(x)) for x in z]
    for _ in range(n):
        w = [sum((mpmath.mpc(complex(c)) * mpmath.fprod(wi ** int(e) for wi, e in zip(w, ex)))
                 for ex, c in zip(P.exps, P.coeffs)) for P in F.components]
    nrm = mpmath.sqrt(mpmath.fsum(abs(x) ** 2 for x in w))
    return float(mpmath.log(nrm) / mpmath.mpf(F.d) ** n)


def _mp_henon(a, c, z, n=45):
    mpmath.mp.dps = 40
    x, y = (mpmath.mpc(complex(v)) for v in z)
    for _ in range(n):
        x, y = y, y * y + c - a * x
    return float(mpmath.log(mpmath.sqrt(abs(x) ** 2 + abs(y) ** 2)) / mpmath.mpf(2) ** n)


def test_steps_for_tol():
    n, ok = steps_for_tol(2.0, 2, 1e-10)
    assert ok and tail_bound(2.0, 2, n) <= 1e-10 < tail_bound(2.0, 2, n - 1)
    n, ok = steps_for_tol(1.0, 2, 1e-300)
    assert n == N_MAX and not ok
    with pytest.raises(ValueError):
        steps_for_tol(1.0, 2, 0.0)


def test_power_map_closed_form_extreme():
    F = make_power_map(2, 2)
    z = np.array([1e200, 1e-200, 3e-250j])
    assert abs(green_lift(F, z).value - math.log(1e200)) < 1e-9
    # orbit converging super-exponentially to a coordinate point
    v = green_lift(F, np.array([1.0, 0.999, 1e-5]))
    assert abs(v.value) <= v.error_bound


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_perturbed_against_mpmath(seed):
    F = make_perturbed_power_map(2, 2, 0.3, seed)
    for z in sample_fs_uniform(3, 2, seed=10 + seed):
        v = green_lift(F, 2.5 * z)
        tail = estimate_c_bound(F) * 2.0 ** -45
        assert abs(v.value - _mp_green(F, 2.5 * z)) <= v.error_bound + tail + 1e-12


def test_ueda_map_green_oracle():
    # for h = t^2, f is the power-like map on symmetric products; G agrees with direct iteration
    F = make_ueda_map([0.3, 0, 1], 2)
    z = np.array([1.0, 0.2 - 0.1j, 0.5j])
    v = green_lift(F, z)
    assert abs(v.value - _mp_green(F, z, 40)) <= v.error_bound + estimate_c_bound(F) * 2.0 ** -40 + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False, allow_infinity=False),
       st.integers(0, 10_000))
def test_homogeneity(lam, seed):
    F = make_perturbed_power_map(1, 3, 0.1, 5)
    z = sample_fs_uniform(1, 1, seed=seed)[0]
    assert abs(green_lift(F, lam * z).value - green_lift(F, z).value - math.log(abs(lam))) <= 2e-10


def test_functional_equation_batch_and_workers():
    F = make_perturbed_power_map(2, 3, 0.05, 2)
    Z = sample_fs_uniform(3000, 2, seed=4)
    g, gv = green_lift_batch(F, Z, 1e-10, workers=1)
    g4, _ = green_lift_batch(F, Z, 1e-10, workers=4)
    assert np.array_equal(g, g4)
    gF, gvF = green_lift_batch(F, F(Z), 1e-10)
    assert np.max(np.abs(gF - 3 * g)) <= gvF.error_bound + 3 * gv.error_bound


def test_accumulator_partials_monotone_error():
    F = make_power_map(1, 2)
    acc = OrbitAccumulator(F, np.array([[1.0, 2.0]]))
    bounds = []
    for _ in range(10):
        acc.step()
        bounds.append(acc.error_bound)
    assert all(b2 < b1 for b1, b2 in zip(bounds, bounds[1:]))
    assert abs(acc.partial[0] - math.log(2)) <= acc.error_bound


def test_green_potential_and_grid_spot_value():
    F = make_power_map(1, 2)
    # g = max log|w_i| at the unit representative
    assert np.isclose(green_potential(F, point(1, 2)), math.log(2 / math.sqrt(5)), atol=1e-10)
    xs, ys, g, err = green_grid(F, 0, (-2, 2, -2, 2), 41)
    i, j = np.argmin(np.abs(ys)), np.argmin(np.abs(xs - 2))
    assert abs(g[i, j] - green_potential(F, point(1, 2))) < 1e-9


def test_henon_against_mpmath():
    a, c = 1.0, 0.0
    A = make_henon(a, c)
    Z = sample_annulus(2, 3, 6, 20, seed=8)
    vals, esc, _, err = henon_green_plus_batch(A, Z, 50)
    assert esc.all()
    for z, v, e in zip(Z, vals, err):
        assert abs(v - _mp_henon(a, c, z)) < 1e-10 + e


def test_henon_bounded_flag_and_invariance():
    A = make_henon(1.0, 0.0)
    v = henon_green_plus(A, np.array([0.1, -0.2]), N=200)
    assert v.value == 0 and not v.escaped and v.flag == "bounded-orbit up to N"
    Z = sample_annulus(2, 5, 10, 200, seed=3)
    g, _, _, _ = henon_green_plus_batch(A, Z, 50)
    g1, _, _, _ = henon_green_plus_batch(A, A(Z), 50)
    assert np.max(np.abs(g1 - 2 * g)) < 1e-9
    with pytest.raises(ValueError):
        henon_green_plus_batch(A, Z, 0)
