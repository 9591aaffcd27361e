import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pluridyn.algebraic import HomPoly2
from pluridyn.exceptions import CenterOnCurve
from pluridyn.green import (
    DiscreteMeasure,
    GreenField,
    canonical_potential_of_curve,
    functional_equation_gap,
    green_value,
    line_potential,
    mu_full_fiber,
    mu_sample,
    sub_mean_value_report,
    tail_constant,
)
from pluridyn.projective import random_points


def test_power_map_green_is_identically_zero(f_power, rng):
    X = random_points(2, 200, rng)
    for n in range(11):
        assert np.all(GreenField(f_power, n).values(X) == 0.0)
    assert tail_constant(f_power)[0] == 0.0


def test_green_is_projectively_invariant(f_pert, rng):
    X = random_points(2, 50, rng)
    gf = GreenField(f_pert, 12)
    assert np.allclose(gf.values(X), gf.values((2 - 3j) * X), atol=1e-13)


def test_green_truncation_within_bound(f_pert, rng):
    X = random_points(2, 200, rng)
    gf = GreenField(f_pert, 8)
    assert np.abs(gf.values(X, 8) - gf.values(X, 30)).max() <= gf.bound(8)


def test_functional_equation(f_pert, rng):
    X = random_points(2, 200, rng)
    assert functional_equation_gap(GreenField(f_pert, 10), X) < 1e-12


def test_green_value_returns_bound(f_pert):
    v, b = green_value(GreenField(f_pert, 20), np.array([1, 0.5, 0.2]))
    assert np.isscalar(v) or np.ndim(v) == 0
    assert 0 < b < 1e-5


def test_tail_constant_oracle(f_pert):
    # |F|_inf <= 1 + eps on the unit sup sphere, so M >= log(1.05) is the rigorous upper side
    M, det = tail_constant(f_pert)
    assert det["upper_bound"] == pytest.approx(np.log(1.05))
    assert M >= det["upper_bound"]


def test_mu_sample_is_deterministic_across_threads(f_power):
    a = mu_sample(f_power, 6, 64, seed=3, threads=1, chunk=16)
    b = mu_sample(f_power, 6, 64, seed=3, threads=4, chunk=16)
    assert np.array_equal(a.points, b.points)
    assert a.total_mass == pytest.approx(1.0)


def test_mu_of_power_map_lies_near_the_torus(f_power):
    # backward walks take 2^n-th roots of moduli, so the moduli ratios approach 1
    m = mu_sample(f_power, 10, 100, seed=1)
    A = np.abs(m.points)
    assert np.abs(np.log(A[:, 0] / A[:, 2])).max() < 0.05


def test_mu_full_fiber_weights(f_pert):
    m = mu_full_fiber(f_pert, np.array([0.3, 1, 0.2j]), 2)
    assert len(m) == 16
    assert m.total_mass == pytest.approx(1.0)


def test_discrete_measure_csv_roundtrip(f_power):
    m = mu_sample(f_power, 3, 10, seed=0)
    r = DiscreteMeasure.from_csv(m.to_csv())
    assert np.array_equal(r.points, m.points) and np.array_equal(r.weights, m.weights)


def test_discrete_measure_rejects_negative_weights():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.eye(3), [1, -1, 1])


def test_curve_potential_closed_form(rng):
    # P = z0 with center [1:1:1]: g(x) = log(|x0|/|x|) + log(sqrt 3)
    P = HomPoly2.linear([1, 0, 0])
    g = canonical_potential_of_curve(P, [1, 1, 1])
    X = random_points(2, 50, rng)
    expect = np.log(np.abs(X[:, 0]) / np.linalg.norm(X, axis=1)) + 0.5 * np.log(3)
    assert np.allclose(g(X), expect, atol=1e-12)
    assert g(np.array([2, 2, 2.0])) == 0.0


def test_center_on_curve_raises():
    with pytest.raises(CenterOnCurve):
        canonical_potential_of_curve(HomPoly2.linear([1, 0, 0]), [0, 0, 1])


def test_curve_potential_is_log_singular_on_the_curve():
    g = canonical_potential_of_curve(HomPoly2.linear([1, 0, 0]), [1, 0, 1])
    assert g(np.array([0, 1, 1.0])) == -np.inf


def test_line_potential_matches_curve_potential(rng):
    h = np.array([1, 2j, -1])
    X = random_points(2, 20, rng)
    a = line_potential(h, [1, 0, 0])(X)
    b = canonical_potential_of_curve(HomPoly2.linear(h), [1, 0, 0])(X)
    assert np.allclose(a, b, atol=1e-12)


@given(st.integers(0, 1000))
@settings(max_examples=10, deadline=None)
def test_potential_is_quasi_psh(seed):
    P = HomPoly2.linear([1, 0.5, 0]) * HomPoly2.linear([0, 1, -0.3j])
    rep = sub_mean_value_report(canonical_potential_of_curve(P, [1, 1, 1]), n_discs=30, seed=seed)
    assert rep["violations"] == 0
