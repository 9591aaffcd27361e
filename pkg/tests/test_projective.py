import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pluridyn.exceptions import PointInCenter, ZeroVector
from pluridyn.projective import (
    CenterProjection,
    FubiniStudyForm,
    HomogeneousPoint,
    LinearSubspace,
    coordinate_projection,
    fs_distance,
    fs_norm2,
    normalize,
    projective_equal,
    random_points,
    tangent_frame,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)
vec3 = st.lists(cplx, min_size=3, max_size=3).map(lambda v: np.array(v)).filter(
    lambda v: np.max(np.abs(v)) > 1e-3)
scalar = cplx.filter(lambda c: 1e-3 < abs(c) < 1e3)


def test_normalize_sets_dominant_coordinate_to_one():
    x = normalize(np.array([0.5, -2j, 1.0]))
    assert x[1] == 1.0
    assert np.max(np.abs(x)) == 1.0


def test_normalize_rejects_zero():
    with pytest.raises(ZeroVector):
        normalize(np.zeros(3))


@given(vec3, scalar)
def test_normalize_is_scale_invariant(x, c):
    a, b = normalize(x), normalize(c * x)
    assert np.allclose(a, b, atol=1e-12)


@given(vec3, scalar)
def test_distance_is_projective(x, c):
    y = np.array([1.0, 0.3j, -0.2])
    assert abs(fs_distance(x, y) - fs_distance(c * x, y)) < 1e-10
    assert fs_distance(x, c * x) < 1e-7


@given(vec3, vec3, vec3)
@settings(max_examples=60)
def test_distance_is_a_metric(x, y, z):
    dxy, dyz, dxz = fs_distance(x, y), fs_distance(y, z), fs_distance(x, z)
    assert 0 <= dxy <= np.pi / 2 + 1e-12
    assert abs(dxy - fs_distance(y, x)) < 1e-12
    assert dxz <= dxy + dyz + 1e-9


def test_orthogonal_points_are_at_distance_half_pi():
    assert np.isclose(fs_distance(np.eye(3)[0], np.eye(3)[1]), np.pi / 2)


def test_small_angle_accuracy():
    x = np.array([1.0, 0, 0], dtype=complex)
    y = np.array([1.0, 1e-9, 0], dtype=complex)
    assert np.isclose(fs_distance(x, y), 1e-9, rtol=1e-6)


def test_homogeneous_point_equality():
    assert HomogeneousPoint([1, 2, 3]) == HomogeneousPoint([2j, 4j, 6j])
    assert HomogeneousPoint([1, 2, 3]) != HomogeneousPoint([1, 2, 3.1])
    with pytest.raises(ZeroVector):
        HomogeneousPoint([0, 0, 0])


def test_line_area_is_one():
    w = FubiniStudyForm()
    assert w.total_volume() == 1.0
    # a unit tangent of the FS metric has area density 1/pi per unit raw length
    x = np.array([[1, 0, 0]], dtype=complex)
    v = np.array([[0, 1, 0]], dtype=complex)
    assert np.isclose(w.area_density(x, v)[0], 1 / np.pi)


@given(vec3)
@settings(max_examples=40)
def test_tangent_frame_is_orthonormal(x):
    E = tangent_frame(x)[0]
    for i in range(2):
        assert abs(np.vdot(x, E[i])) < 1e-9 * np.linalg.norm(x) ** 2
        assert np.isclose(fs_norm2(x, E[i]), 1.0)
    assert abs(np.vdot(E[0], E[1])) < 1e-9 * np.linalg.norm(x) ** 2


def test_random_points_are_unitarily_invariant():
    X = random_points(2, 20000, np.random.default_rng(0))
    w = np.abs(X) ** 2 / np.sum(np.abs(X) ** 2, axis=1)[:, None]
    # each |z_i|^2/|z|^2 has mean 1/3 under the FS measure
    assert np.allclose(w.mean(axis=0), 1 / 3, atol=0.01)


def test_linear_subspace_dimension_and_membership():
    L = LinearSubspace(np.array([[1, 0, 0], [0, 1, 0], [1, 1, 0]]))
    assert L.dimension == 1 and L.ambient_dim == 2
    assert L.contains(np.array([3, -1j, 0])).all()
    assert not L.contains(np.array([1, 0, 1e-3])).any()
    K = LinearSubspace.from_kernel([[0, 0, 1]])
    assert K.dimension == 1
    assert K.contains(np.array([2, 5, 0])).all()


def test_projection_and_fiber_scaling():
    cp = coordinate_projection()
    x = np.array([1, 2, 3], dtype=complex)
    assert projective_equal(cp.project(x), np.array([1, 2, 0]))
    assert projective_equal(cp.fiber_scale(0.5, x), np.array([1, 2, 1.5]))
    assert projective_equal(cp.fiber_scale(1.0, x), x)
    # defined up to the phase of the unit lift of the center
    assert np.isclose(abs(cp.fiber_coordinate(x)[0]), 3 / np.sqrt(5))
    with pytest.raises(PointInCenter):
        cp.project(np.array([0, 0, 1.0]))


def test_projection_requires_complementary_subspaces():
    with pytest.raises(ValueError):
        CenterProjection(np.array([[1, 0, 0]]), np.array([[1, 0, 0], [0, 1, 0]]))


@given(vec3, st.floats(0.1, 2.0))
@settings(max_examples=40)
def test_fiber_scaling_preserves_fibers(x, theta):
    cp = coordinate_projection()
    if np.linalg.norm(x[:2]) < 1e-3 * np.linalg.norm(x):
        return
    y = cp.fiber_scale(theta, x)
    assert fs_distance(cp.project(y), cp.project(x)) < 1e-9
