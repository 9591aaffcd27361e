import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pluridyn.endomorphism import power_map
from pluridyn.entropy import (
    SeparationRun,
    chordal_radius,
    entropy_estimate,
    fiber_depth,
    graph_volume,
    hermitian_embedding,
    is_separated,
    orbits,
    separated_count,
    separated_set,
    separation_run,
    volume_growth,
)
from pluridyn.exceptions import DegenerateFit
from pluridyn.homotopy import preimages
from pluridyn.projective import fs_distance, random_points


@given(st.integers(0, 10_000))
@settings(max_examples=30)
def test_embedding_distance_is_chordal(seed):
    X = random_points(2, 2, np.random.default_rng(seed))
    E = hermitian_embedding(X)
    r = fs_distance(X[0], X[1])
    assert np.linalg.norm(E[0] - E[1]) == pytest.approx(np.sqrt(2) * np.sin(r), abs=1e-12)
    assert chordal_radius(r) == pytest.approx(np.sqrt(2) * np.sin(r))


def test_orbits_shape(f_pert, rng):
    O = orbits(f_pert, random_points(2, 7, rng), 4)
    assert O.shape == (4, 7, 3)
    assert fs_distance(O[3], f_pert.iterate(O[0], 3)).max() < 1e-10


@given(st.integers(0, 1000), st.integers(1, 4), st.sampled_from([0.1, 0.3, 0.6]))
@settings(max_examples=15, deadline=None)
def test_greedy_set_is_separated_and_maximal(seed, n, eps):
    f = power_map()
    X = random_points(2, 150, np.random.default_rng(seed))
    idx = separated_set(f, X, n, eps)
    assert is_separated(f, X[idx], n, eps)
    # maximality: every other point is shadowed by a kept point for n steps
    O = orbits(f, X, n)
    D = np.zeros((X.shape[0], idx.size))
    for Ot in O:
        D = np.maximum(D, fs_distance(Ot[:, None, :], Ot[idx][None, :, :]))
    rest = np.setdiff1d(np.arange(X.shape[0]), idx)
    assert np.all(D[rest].min(axis=1) <= eps + 1e-12)


def test_tiny_eps_keeps_everything(f_pert, rng):
    X = random_points(2, 200, rng)
    assert separated_count(f_pert, X, 3, 1e-9) == 200
    assert separated_count(f_pert, X[:0], 3, 0.1) == 0


def test_fiber_cloud_counts_grow(f_pert):
    X, _ = preimages(f_pert, np.array([0.3, 1, 0.2j]), 4)
    run = separation_run(f_pert, X, [1, 2, 3, 4], 0.7)
    assert run.cloud_size == 256
    assert run.counts[-1] > run.counts[0]


def test_fiber_depth():
    f = power_map()
    assert fiber_depth(f, 4096) == 6
    assert fiber_depth(f, 4097) == 7
    assert fiber_depth(f, 1) == 1


def test_entropy_estimate_synthetic():
    ns = list(range(1, 9))
    run = SeparationRun(0.1, ns, [2 ** n for n in ns], 10 ** 6)
    est, per = entropy_estimate(run)
    assert est == pytest.approx(np.log(2))
    assert per[0.1] == (pytest.approx(np.log(2)), False)


def test_entropy_saturation_window():
    ns = list(range(1, 9))
    counts = [min(4 ** n, 2000) for n in ns]
    _, per = entropy_estimate(SeparationRun(0.1, ns, counts, 2000))
    # only n = 1..4 have counts <= 500, so four points remain and the slope is log 4
    assert per[0.1][0] == pytest.approx(np.log(4)) and not per[0.1][1]
    _, per = entropy_estimate(SeparationRun(0.1, ns, [900] * 8, 1000))
    assert per[0.1] == (pytest.approx(0.0), True)


def test_degenerate_fit():
    with pytest.raises(DegenerateFit):
        entropy_estimate(SeparationRun(0.1, [1, 2, 3], [2, 4, 8], 100))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_graph_volume_cohomological_oracle(f_pert, n):
    # (1/2) int (sum_{i<n} (f^i)^* omega)^2 = (1/2) (sum_i d^i)^2 over P^2
    v, se = graph_volume(f_pert, None, n, mc_points=40_000, seed=1)
    assert abs(v - 0.5 * (2 ** n - 1) ** 2) <= 5 * se + 1e-12


def test_volume_growth_rate_on_the_plane(f_pert):
    run = volume_growth(f_pert, None, [3, 4, 5, 6], mc_points=20_000, seed=2)
    # (2^n - 1)^2 grows like 4^n
    assert run.rate == pytest.approx(np.log(4), abs=0.1)
    assert run.region_volume == pytest.approx(0.5, abs=1e-12)


def test_volume_on_region_is_smaller(f_pert, region):
    run = volume_growth(f_pert, region, [1, 2, 3, 4], mc_points=20_000, seed=3)
    assert run.region_volume < 0.5
    assert run.rate < np.log(4)
