import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from pluridyn.currents import omega, strictly_psh_form
from pluridyn.estimators import (
    AttractingCurrent,
    EquilibriumMeasure,
    GreenFunction,
    MuSampler,
    SeparatedSetEntropy,
)
from pluridyn.homotopy import preimages
from pluridyn.projective import random_points

LINE = np.array([[1, 0.05j, 0.02], [0.01, 1, -0.03]])


def test_green_transformer(f_power, f_pert, rng):
    X = random_points(2, 20, rng)
    assert np.all(GreenFunction(f_power, 8).fit().transform(X) == 0)
    g = GreenFunction(f_pert, 8).fit_transform(X)
    assert g.shape == (20, 1)


def test_params_and_clone(f_pert):
    est = GreenFunction(f_pert, n=5)
    assert est.get_params()["n"] == 5
    c = clone(est.set_params(n=7))
    assert c.n == 7 and not hasattr(c, "field_")


def test_not_fitted(f_pert):
    with pytest.raises(NotFittedError):
        GreenFunction(f_pert).transform(np.eye(3))
    with pytest.raises(NotFittedError):
        EquilibriumMeasure(f_pert).score()


def test_wrong_map_type():
    with pytest.raises(TypeError):
        GreenFunction(map="not a map").fit()


def test_wrong_point_dimension(f_pert):
    with pytest.raises(ValueError):
        GreenFunction(f_pert).fit().transform(np.ones((3, 4)))


def test_mu_sampler(f_power):
    pts = MuSampler(f_power, n=4, count=16, seed=2).fit().sample()
    assert pts.shape == (16, 3)


def test_attracting_current(f_pert, region):
    est = AttractingCurrent(f_pert, region, n_max=4, quad_tol=1e-3).fit(LINE)
    p = est.transform([omega(), strictly_psh_form(2)])
    assert p[0] == pytest.approx(1.0, abs=1e-3)
    assert 0 <= p[1] < 1e-3
    assert est.predict() is None or len(est.predict()) == 3


def test_equilibrium_measure(f_pert, region):
    est = EquilibriumMeasure(f_pert, region, n=4, tol=1e-3).fit(LINE)
    assert est.nu_.raw_mass == pytest.approx(1.0, abs=1e-2)
    assert -0.25 <= est.score() <= 0
    with pytest.raises(ValueError):
        EquilibriumMeasure(f_pert, region, mode="bogus").fit(LINE)


def test_separated_set_entropy(f_pert):
    X, _ = preimages(f_pert, np.array([0.3, 1, 0.2j]), 4)
    est = SeparatedSetEntropy(f_pert, n_values=(1, 2, 3, 4), eps_values=(0.5, 0.7)).fit(X)
    assert set(est.per_eps_) == {0.5, 0.7}
    assert est.entropy_ == max(v[0] for v in est.per_eps_.values())
