import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greenlab.projective import (IndeterminatePointError, ProjectivePoint, ball_points, chart_coordinates,
                                 fs_distance, normalize, normalize_batch, point, read_points_csv, same_point,
                                 sample_fs_ball, sample_fs_uniform, sample_on_subspace, tangent_basis,
                                 write_points_csv)

cplx = st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False)


def _vec(n):
    # one coordinate is pinned away from zero so the point is determinate
    big = st.builds(complex, st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
    return st.tuples(st.lists(cplx, min_size=n - 1, max_size=n - 1), big, st.integers(0, n - 1)).map(
        lambda t: t[0][:t[2]] + [t[1]] + t[0][t[2]:])


scalars = st.builds(lambda m, th: m * complex(math.cos(th), math.sin(th)),
                    st.floats(1e-3, 1e3), st.floats(0, 2 * math.pi))


@settings(max_examples=80, deadline=None)
@given(_vec(3), scalars)
def test_normalize_scaling(v, lam):
    z = np.array(v)
    p, a = normalize(z)
    q, b = normalize(lam * z)
    assert abs(np.linalg.norm(p.coords) - 1) < 1e-14
    assert same_point(p, q, 1e-7)
    assert abs((b - a) - math.log(abs(lam))) < 1e-9


def test_normalize_extreme_magnitudes():
    p, a = normalize(np.array([1e300, 3e300]))
    assert np.isclose(a, math.log(math.sqrt(10)) + 300 * math.log(10))
    p, a = normalize(np.array([1e-290, 0.0]))
    assert np.allclose(np.abs(p.coords), [1, 0])
    with pytest.raises(IndeterminatePointError):
        normalize(np.zeros(3))
    with pytest.raises(IndeterminatePointError):
        normalize_batch(np.array([[1, 0], [0, 0]]))


def test_projective_point_requires_unit_norm():
    with pytest.raises(ValueError):
        ProjectivePoint(np.array([1.0, 1.0]))


@settings(max_examples=80, deadline=None)
@given(_vec(3), _vec(3), _vec(3))
def test_fs_distance_metric(a, b, c):
    p, q, r = (normalize(np.array(x))[0] for x in (a, b, c))
    dpq, dqp = fs_distance(p, q), fs_distance(q, p)
    assert abs(dpq - dqp) < 1e-12
    assert 0 <= dpq <= math.pi / 2 + 1e-12
    assert fs_distance(p, p) < 1e-7
    assert dpq <= fs_distance(p, r) + fs_distance(r, q) + 1e-9


def test_fs_distance_closed_form():
    # [1:0] and [1:t]: arctan |t|
    for t in (0.1, 1.0, 7.0):
        assert np.isclose(fs_distance(point(1, 0), point(1, t)), math.atan(t))
    assert np.isclose(fs_distance(point(1, 0), point(0, 1)), math.pi / 2)


def test_fs_uniform_marginal():
    # on P^k, |w_0|^2 of an FS-uniform point is Beta(1, k)
    for k in (1, 2, 3):
        W = sample_fs_uniform(100_000, k, seed=3)
        x = np.abs(W[:, 0]) ** 2
        assert abs(x.mean() - 1 / (k + 1)) < 5e-3
        assert abs(np.mean(x < 0.1) - (1 - 0.9 ** k)) < 5e-3


def test_sample_on_subspace():
    W = sample_on_subspace({0, 2}, 50, 3, seed=1)
    assert np.all(W[:, [0, 2]] == 0)
    assert np.allclose(np.linalg.norm(W, axis=1), 1)


def test_tangent_basis_orthonormal():
    c = point(0.3, 1j, -2).coords
    B = tangent_basis(c)
    M = np.column_stack([c, B])
    assert np.allclose(M.conj().T @ M, np.eye(3), atol=1e-12)


def test_ball_points_distance():
    c = point(1, 2, 3)
    v = np.array([[0.5, 0.0], [0.0, 2j]])
    d = fs_distance(ball_points(c, v), c.coords)
    assert np.allclose(d, np.arctan([0.5, 2.0]))


def test_fs_ball_radial_law():
    # FS volume of a ball of radius s in P^k is sin(s)^(2k): P(dist <= s) = (sin s / sin r)^(2k)
    r = 0.2
    for k in (1, 2):
        pts, rej = sample_fs_ball(point(*([1] * (k + 1))), r, 40_000, seed=9)
        d = fs_distance(pts, point(*([1] * (k + 1))).coords)
        assert d.max() <= r + 1e-12
        s = 0.15
        expect = (math.sin(s) / math.sin(r)) ** (2 * k)
        assert abs(np.mean(d <= s) - expect) < 0.01
        assert 0 <= rej < 1


def test_chart_coordinates():
    W = np.array([[1, 2, 3], [2, 4, 0]], dtype=complex)
    assert np.allclose(chart_coordinates(W, 0), [[2, 3], [2, 0]])


def test_points_csv_roundtrip(tmp_path):
    W = sample_fs_uniform(20, 2, seed=1)
    write_points_csv(tmp_path / "p.csv", W)
    assert np.array_equal(read_points_csv(tmp_path / "p.csv"), W)
