import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pluridyn.currents import (
    SampledCurrent,
    StructuralDisc,
    adaptive_pushforward,
    bump,
    coordinate_weight,
    cutoff_omega,
    decay_rates,
    default_automorphisms,
    disc_evaluate,
    disc_regularity,
    levi_ratio,
    line_current,
    omega,
    pair,
    pullback_form,
    pulled_omega,
    push_linear,
    pushforward,
    slice_mass_scan,
    strictly_psh_form,
)
from pluridyn.endomorphism import perturbed_power_map, power_map
from pluridyn.exceptions import RefinementBudgetExceeded, ThetaOutOfDomain, WrongDimension
from pluridyn.projective import coordinate_projection
from pluridyn.quadrature import RefinePolicy, adaptive_line_quadrature, line_lift, uniform_line_grid

L0 = np.array([[1, 0.1j, 0.05], [0.03, 1, -0.04]])
E01 = np.eye(3)[:2]


def _integrate(a, b, func, tol=1e-8):
    def ev(u, p):
        X, T = line_lift(a, b, u, p)
        return {"values": func(X)[:, None]}

    return adaptive_line_quadrature(ev, RefinePolicy(quad_tol=tol))[1][0]


def test_line_area_is_one():
    a, b = np.eye(3)[0].astype(complex), np.eye(3)[1].astype(complex)
    assert _integrate(a, b, lambda X: np.ones(X.shape[0])) == pytest.approx(1, abs=1e-12)


def test_coordinate_weight_averages_to_half_on_a_line():
    a, b = np.eye(3)[0].astype(complex), np.eye(3)[1].astype(complex)
    assert _integrate(a, b, coordinate_weight(0)) == pytest.approx(0.5, abs=1e-9)


def test_uniform_grid_weights_sum_to_one():
    _, _, w = uniform_line_grid(12, 20)
    assert w.sum() == pytest.approx(1.0)


def test_line_lift_tangents_are_orthogonal_unit():
    a, b = np.eye(3)[0].astype(complex), np.eye(3)[2].astype(complex)
    X, T = line_lift(a, b, np.linspace(-1, 1, 7), np.linspace(0, 6, 7))
    assert np.allclose(np.linalg.norm(X, axis=1), 1)
    assert np.allclose(np.linalg.norm(T, axis=1), 1)
    assert np.allclose(np.sum(np.conj(X) * T, axis=1), 0, atol=1e-14)


def test_refinement_budget():
    f = perturbed_power_map(0.05)
    with pytest.raises(RefinementBudgetExceeded):
        adaptive_pushforward(L0, f, 6, RefinePolicy(quad_tol=1e-10, max_nodes=5000))


def test_line_current_mass_and_pairing():
    S = line_current(E01, 4096)
    assert S.mass() == pytest.approx(1.0, abs=1e-12)
    assert pair(S, omega()) == pytest.approx(1.0, abs=1e-12)
    assert pair(S, strictly_psh_form(2)) == pytest.approx(0.0, abs=1e-15)


def test_line_current_requires_a_line():
    with pytest.raises(WrongDimension):
        line_current(np.eye(3))


@pytest.mark.parametrize("n", [0, 1, 2, 3, 4])
def test_power_map_image_of_coordinate_line_has_degree_mass(n):
    # f^n maps {z2 = 0} onto itself with degree 2^n
    S = adaptive_pushforward(E01, power_map(), n, RefinePolicy(quad_tol=1e-8))
    assert S.raw_mass == pytest.approx(2 ** n, rel=1e-8)
    assert S.mass() == pytest.approx(1.0, rel=1e-8)


def test_pushforward_by_nodes_agrees_with_adaptive():
    f = perturbed_power_map(0.05)
    w = cutoff_omega(bump(np.array([1, 1, 0]), 0.7))
    S0 = line_current(L0, 200_000)
    a = pair(pushforward(S0, f, 2), w)
    b = pair(adaptive_pushforward(L0, f, 2, RefinePolicy(quad_tol=1e-8), [w]), w)
    assert a == pytest.approx(b, rel=1e-4)


def test_pushforward_pullback_adjunction():
    f = perturbed_power_map(0.05)
    w = cutoff_omega(coordinate_weight(0))
    lhs = pair(adaptive_pushforward(L0, f, 1, RefinePolicy(quad_tol=1e-9), [w]), w)
    rhs = pair(line_current(L0, 400_000), pullback_form(w, f, 1))
    assert lhs == pytest.approx(rhs, rel=1e-6)


def test_current_csv_roundtrip(tmp_path):
    S = line_current(L0, 64)
    S.write(str(tmp_path / "cur"))
    R = SampledCurrent.from_csv((tmp_path / "cur.csv").read_text())
    assert np.array_equal(R.points, S.points)
    assert np.array_equal(R.tangents, S.tangents)
    assert np.array_equal(R.weights, S.weights)


@given(st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_linear_images_of_lines_have_mass_one(seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    S = push_linear(line_current(L0, 20_000), M)
    assert S.mass() == pytest.approx(1.0, abs=2e-3)


def test_pulled_omega_of_unitary_is_omega():
    mats, _ = default_automorphisms()
    S = line_current(L0, 1024)
    assert np.allclose(pulled_omega(mats[0])(S.points, S.tangents), 1.0)


def test_form_combinations():
    S = line_current(L0, 1024)
    a, b = omega(), strictly_psh_form(2)
    assert pair(S, 2.0 * a + b) == pytest.approx(2 * pair(S, a) + pair(S, b))
    assert (a + pulled_omega(np.eye(3))).closed
    assert not (a + b).closed


def test_levi_ratio_of_log_norm():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((5, 3)) + 0j
    T = rng.standard_normal((5, 3)) + 0j
    r = levi_ratio(lambda Z: np.log(np.sum(np.abs(Z) ** 2, axis=1)), X, T)
    assert np.allclose(r, 2.0, rtol=1e-5)


@pytest.fixture(scope="module")
def disc():
    mats, rho = default_automorphisms()
    return StructuralDisc(line_current(L0, 4096), coordinate_projection(), mats, rho)


def test_disc_at_one_is_the_base(disc):
    w = cutoff_omega(bump(np.array([1, 1, 0]), 0.5))
    assert disc.pairing(w, 1.0) == pytest.approx(pair(disc.base, w), rel=1e-12)
    assert disc_evaluate(disc, 0.5).meta["theta"] == [0.5, 0.0]


def test_disc_domain(disc):
    assert disc.in_domain(0.5 + 0.1j)
    assert not disc.in_domain(1.5)
    with pytest.raises(ThetaOutOfDomain):
        disc.evaluate(-0.5)


def test_disc_rejects_bad_weights():
    with pytest.raises(ValueError):
        StructuralDisc(line_current(L0, 64), coordinate_projection(), [np.eye(3)] * 2, [0.7, 0.7])


def test_slice_masses_are_constant(disc):
    m = np.array(slice_mass_scan(disc, np.linspace(0, 1, 7)))
    assert np.allclose(m, 1.0, atol=1e-6)


def test_disc_regularity_is_finite(disc):
    c = disc_regularity(disc, strictly_psh_form(2), [0.05, 0.1], directions=4)
    assert np.isfinite(c) and c >= 0


def test_decay_rates_shape():
    f = perturbed_power_map(0.05)
    w = coordinate_weight(0)
    r = decay_rates(L0, f, w, [w], [(w, coordinate_weight(1))], range(1, 4),
                    RefinePolicy(quad_tol=1e-4), fit=False)
    assert r["a"].shape == (3, 1) and r["b"].shape == (3, 1)
    assert np.all(np.isfinite(r["a"])) and np.all(r["b"] >= 0)
