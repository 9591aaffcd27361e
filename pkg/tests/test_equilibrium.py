import json

import numpy as np
import pytest

from pluridyn.currents import bump
from pluridyn.endomorphism import power_map
from pluridyn.equilibrium import (
    envelope,
    envelope_decreasing,
    hermitian_observables,
    invariance_gap,
    max_atom,
    mixing_correlation,
    nu_exact_small,
    nu_sample,
)
from pluridyn.exceptions import ResultantOverflow
from pluridyn.regions import fiber_cone

E01 = np.eye(3)[:2]


@pytest.fixture(scope="module")
def nu_power():
    return nu_sample(power_map(), fiber_cone(0.2), E01, 6, tol=1e-6)


@pytest.fixture(scope="module")
def nu_pert(f_pert, region):
    L = np.array([[1, 0.05j, 0.02], [0.01, 1, -0.03]])
    return nu_sample(f_pert, region, L, 6, tol=1e-4)


def test_power_map_symmetry_oracles(nu_power):
    re00, re11, re01, im01, re02 = (nu_power.pair(o) for o in hermitian_observables())
    assert nu_power.raw_mass == pytest.approx(1.0, abs=1e-8)
    assert re00 == pytest.approx(0.5, abs=1e-8) and re11 == pytest.approx(0.5, abs=1e-8)
    assert abs(re01) < 1e-8 and abs(im01) < 1e-8 and abs(re02) < 1e-12


def test_weights_are_normalized(nu_pert):
    assert nu_pert.weights.sum() == pytest.approx(1.0)
    assert nu_pert.raw_mass == pytest.approx(1.0, abs=1e-3)
    assert 0 < max_atom(nu_pert) < 1e-3


def test_support_stays_in_the_region(nu_pert, region):
    assert region.u(nu_pert.points).max() < 0


@pytest.mark.parametrize("n", [2, 4, 6])
def test_invariance_gap_telescoping_bound(f_pert, region, n):
    # f_* nu_n - nu_n is 1/n times a difference of two probability measures,
    # and every observable takes values in [-1/2, 1]
    L = np.array([[1, 0.05j, 0.02], [0.01, 1, -0.03]])
    gap = invariance_gap(nu_sample(f_pert, region, L, n, tol=1e-4), f_pert, hermitian_observables())
    assert gap <= 1.0 / n


def test_centerings_agree_at_lag_zero(nu_pert, f_pert):
    phi = bump(np.array([1, 1, 0]), 0.5)
    a = mixing_correlation(nu_pert, f_pert, phi, phi, [0, 1, 2])
    b = mixing_correlation(nu_pert, f_pert, phi, phi, [0, 1, 2], centering="product")
    assert a[0] == pytest.approx(b[0])
    assert a[0] > 0  # a variance
    with pytest.raises(ValueError):
        mixing_correlation(nu_pert, f_pert, phi, phi, [0], centering="other")


def test_envelope():
    env = envelope([0.1, -0.5, 0.2, 0.05])
    assert np.allclose(env, [0.5, 0.5, 0.2, 0.05])
    assert np.all(np.diff(env) <= 0)
    assert envelope_decreasing([1, 0.5, 0.1])
    assert not envelope_decreasing([0.1, 0.2, 0.3])


def test_exact_mode_budget(f_pert, region):
    with pytest.raises(ResultantOverflow):
        nu_exact_small(f_pert, region, E01, 5)


def test_exact_mode_small_case_matches_density(f_pert, region):
    L = np.array([[1, 0.05j, 0.02], [0.01, 1, -0.03]])
    e = nu_exact_small(f_pert, region, L, 1, lines=16)
    d = nu_sample(f_pert, region, L, 1, tol=1e-6)
    assert e.raw_mass == pytest.approx(1.0)
    # n = 1 is the Crofton average of [L] ^ f^*[H]: 2 points per line
    assert len(e.weights) == 16 * 2
    re00 = hermitian_observables()[0]
    assert e.pair(re00) == pytest.approx(d.pair(re00), abs=0.1)


def test_write_artifacts(nu_pert, tmp_path):
    nu_pert.write(str(tmp_path / "nu"))
    side = json.loads((tmp_path / "nu.json").read_text())
    assert side["mode"] == "density" and side["n"] == 6
    assert (tmp_path / "nu.csv").read_text().startswith("re0,im0")
