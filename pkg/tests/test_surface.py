from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morsesmale.catalog import north_south_map
from morsesmale.errors import ChartEscape, NoInverse, NonOrientationPreserving
from morsesmale.surface import (MapSpec, SurfaceModel, SurfacePoint, apply_jacobian, apply_map, frame_sign,
                                newton_inverse, step)

coord = st.floats(-50, 50, allow_nan=False)


@given(coord, coord, coord, coord)
def test_torus_delta_is_minimal_image(a, b, c, d):
    s = SurfaceModel("torus")
    v = s.delta(np.array([a, b]), np.array([c, d]))
    assert np.all(np.abs(v) <= 0.5 + 1e-12)
    assert np.allclose(np.mod(np.array([a, b]) + v - np.array([c, d]) + 0.5, 1.0), 0.5, atol=1e-9)


def test_torus_normalize_wraps_into_unit_square():
    s = SurfaceModel("torus")
    _, xy = s.normalize(np.array([0, 0]), np.array([[1.25, -0.5], [-1e-18, 3.0]]))
    assert np.all((xy >= 0) & (xy < 1))
    assert np.allclose(xy[0], [0.25, 0.5])


def test_plane_escape():
    s = SurfaceModel("plane", plane_bound=10.0)
    with pytest.raises(ChartEscape):
        s.normalize(np.array([0]), np.array([[11.0, 0.0]]))
    _, xy = s.normalize(np.array([0]), np.array([[11.0, 0.0]]), strict=False)
    assert np.all(np.isnan(xy))


@settings(max_examples=50)
@given(st.floats(0.1, 5.0), st.floats(0, 2 * np.pi))
def test_sphere_transition_round_trip(r, th):
    s = SurfaceModel("sphere")
    p = np.array([[r * np.cos(th), r * np.sin(th)]])
    q = s.transition(0, 1, p)
    assert np.allclose(s.transition(1, 0, q), p, rtol=1e-12)
    c, xy = s.normalize(np.array([0]), p)
    assert np.hypot(*xy[0]) <= 1.0 + 1e-12
    assert s.distance(SurfacePoint(0, tuple(p[0])), SurfacePoint(int(c[0]), tuple(xy[0]))) < 1e-9


def test_sphere_transition_is_orientation_reversing_in_raw_coordinates():
    s = SurfaceModel("sphere")
    J = s.transition_jacobian(0, 1, np.array([[0.7, 0.3]]))[0]
    assert np.linalg.det(J) < 0
    assert s.orientation(0) * s.orientation(1) == -1


def test_frame_sign_respects_chart_orientation():
    s = SurfaceModel("sphere")
    x0, x1 = SurfacePoint(0, (0.5, 0.0)), SurfacePoint(1, (0.5, 0.0))
    assert frame_sign(s, x0, (1, 0), (0, 1)) == 1
    assert frame_sign(s, x1, (1, 0), (0, 1)) == -1
    assert frame_sign(s, x0, (1, 0), (2, 0)) == 0


def test_frame_sign_is_chart_independent_on_the_sphere():
    # the same geometric frame seen from both charts gets the same sign
    s = SurfaceModel("sphere")
    p = np.array([[0.6, 0.5]])
    u, v = np.array([1.0, 0.2]), np.array([-0.3, 1.0])
    J = s.transition_jacobian(0, 1, p)[0]
    q = s.transition(0, 1, p)[0]
    a = frame_sign(s, SurfacePoint(0, tuple(p[0])), u, v)
    b = frame_sign(s, SurfacePoint(1, tuple(q)), J @ u, J @ v)
    assert a == b == 1


def test_step_and_inverse_on_sphere():
    m = north_south_map()
    c, xy = step(m, np.array([0]), np.array([[0.3, 0.4]]), 3)
    assert c[0] == 0 and np.allclose(xy[0], [0.3 / 8, 0.4 / 8])
    c, xy = step(m, c, xy, -3)
    assert np.allclose(xy[0], [0.3, 0.4])
    # w = 0.2 is z = 5; two steps give z = 1.25 (still chart 1), three give z = 0.625
    p = apply_map(m, SurfacePoint(1, (0.2, 0.0)), 2)
    assert p.chart == 1 and np.isclose(p.coords[0], 0.8)
    p = apply_map(m, p)
    assert p.chart == 0 and np.isclose(p.coords[0], 0.625)


def test_newton_inverse_recovers_preimage():
    fwd = lambda c, xy: np.column_stack([xy[:, 0] + 0.1 * np.sin(xy[:, 1]), 0.5 * xy[:, 1] + 0.05 * xy[:, 0] ** 2])
    inv = newton_inverse(fwd, SurfaceModel("plane"))
    x = np.array([[0.3, -0.7], [1.2, 0.4]])
    assert np.allclose(inv(0, fwd(0, x)), x, atol=1e-11)


def test_missing_inverse_and_orientation_reversal():
    m = MapSpec("flip", SurfaceModel("plane"), lambda c, xy: xy * np.array([1.0, -1.0]))
    with pytest.raises(NoInverse):
        step(m, np.array([0]), np.zeros((1, 2)), -1)
    with pytest.raises(NonOrientationPreserving):
        apply_jacobian(m, SurfacePoint(0, (0.0, 0.0)))
