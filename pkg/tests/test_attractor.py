import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pluridyn.attractor import (
    attracting_current,
    attracting_set,
    boundary_points,
    check_star_shaped,
    check_trapping,
    distance_to_set,
    hausdorff,
    jacobian_contraction,
    lebesgue_preimage_stat,
    nearby_lines,
)
from pluridyn.exceptions import RegionFormatError, TrappingViolated
from pluridyn.projective import LinearSubspace
from pluridyn.quadrature import RefinePolicy
from pluridyn.regions import (
    ball_complement,
    expression_region,
    fiber_annulus,
    fiber_cone,
    parse_region,
    region_to_text,
    torus_complement,
)


def test_fiber_cone_is_trapping(f_pert):
    U = fiber_cone(0.2)
    rep = check_trapping(f_pert, U, boundary_samples=500, interior_samples=500)
    assert rep.ok and rep.center_ok and rep.line_ok
    assert rep.preimage_violations == 0
    assert U.validated_margin == pytest.approx(rep.margin)
    # |z2|^2 / max(|z0|,|z1|)^2 type contraction: the image cone is much thinner
    assert rep.margin > 0.1


def test_ball_complement_is_not_trapping(f_pert):
    U = ball_complement([1, 1, 1], 0.3)
    with pytest.raises(TrappingViolated):
        check_trapping(f_pert, U, boundary_samples=300, interior_samples=300)
    assert not check_trapping(f_pert, U, boundary_samples=300, interior_samples=300,
                              raise_on_violation=False).ok


def test_boundary_points_lie_on_the_boundary(rng):
    U = fiber_cone(0.2)
    B = boundary_points(U, U.sample_interior(50, rng), U.sample_complement(50, rng))
    assert np.abs(U.u(B)).max() < 1e-9


def test_star_shape_of_cone_and_failure_of_torus():
    assert check_star_shaped(fiber_cone(0.2), fibers=8).passed
    rep = check_star_shaped(torus_complement(2.0), fibers=8)
    assert not rep.passed and rep.violations > 0
    w = rep.witness
    assert w["inside_at_0"] and w["reentry_t"] > w["exit_t"]


def test_annulus_fails_star_shape_at_the_base():
    rep = check_star_shaped(fiber_annulus(), fibers=4)
    assert not rep.passed and rep.witness["inside_at_0"] is False


def test_region_text_roundtrip():
    for U in (fiber_cone(0.3), torus_complement(3.0), fiber_annulus(0.05, 0.2),
              ball_complement([1, 0.5j, 0], 0.2), expression_region("a2 - 0.1*maximum(a0, a1)")):
        V = parse_region(region_to_text(U))
        X = np.random.default_rng(0).standard_normal((20, 3)) + 0j
        assert V.name == U.name
        assert np.allclose(V.u(X), U.u(X))


@pytest.mark.parametrize("text", ["", "regio fiber_cone", "region fiber_cone\nt 0.2",
                                  "region ball_complement\nradius = 0.2", "region nope",
                                  "region expr\nexpr = __import__('os')", "region fiber_cone\nt = x"])
def test_bad_region_files(text):
    with pytest.raises(RegionFormatError):
        parse_region(text)


@given(st.floats(0.05, 0.5))
@settings(max_examples=10, deadline=None)
def test_cone_membership_is_projective(t):
    U = fiber_cone(t)
    X = np.random.default_rng(1).standard_normal((30, 3)) + 0j
    assert np.array_equal(U.contains(X), U.contains((0.3 - 2j) * X))


def test_attracting_set_shrinks_to_the_line(f_pert, rng):
    U = fiber_cone(0.2)
    A = attracting_set(f_pert, U, 4, grid_size=500)
    assert np.abs(A[:, 2]).max() / np.abs(A[:, :2]).max() < 1e-6
    assert hausdorff(A, A) < 1e-12
    d = distance_to_set(A, np.eye(3)[:2])
    assert d.shape == (500,)


def test_nearby_lines_are_deterministic_and_close():
    L = LinearSubspace(np.eye(3)[:2])
    a = nearby_lines(L, 3, 0.05, seed=4)
    b = nearby_lines(L, 3, 0.05, seed=4)
    for x, y in zip(a, b):
        assert np.array_equal(x.orthonormal_basis, y.orthonormal_basis)
        assert np.abs(x.kernel_forms[0][:2]).max() < 0.1


def test_attracting_current_converges(f_pert):
    U = fiber_cone(0.2)
    L = nearby_lines(U.projection.target, 1, 0.05, 0)[0]
    S, diag = attracting_current(f_pert, U, L, 5, policy=RefinePolicy(quad_tol=1e-3))
    assert diag.limit_estimates is not None
    assert max(diag.cauchy_gaps[-3:]) < 2e-3
    assert np.allclose(diag.masses, 1.0, atol=1e-3)
    assert diag.support_u_max < 0


def test_jacobian_is_contracting_on_the_cone(f_pert):
    rep = jacobian_contraction(f_pert, fiber_cone(0.2), samples=500)
    assert rep["uniqueness_flag"] and rep["max_jacobian"] < 1


def test_preimage_statistic_is_zero_outside_trapped_targets(f_pert):
    r = lebesgue_preimage_stat(f_pert, fiber_cone(0.2), [1, 2], point_samples=3)
    assert np.array_equal(r["fiber_totals"], np.tile([4, 16], (3, 1)))
    assert np.all(r["statistic"] >= 0)
