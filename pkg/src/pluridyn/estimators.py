"""Estimator-style wrappers with ``fit`` / ``transform`` / ``predict``.

Each estimator stores its constructor arguments unchanged (so
``get_params`` / ``set_params`` / ``clone`` work) and puts fitted state in
attributes ending with an underscore.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .endomorphism import ProjectiveMap


def _check_map(f):
    if not isinstance(f, ProjectiveMap):
        raise TypeError(f"expected a ProjectiveMap, got {type(f).__name__}")
    return f


class GreenFunction(TransformerMixin, BaseEstimator):
    """Truncated Green function ``g_n``; ``transform`` returns one column of values."""

    def __init__(self, map=None, n=20):
        self.map = map
        self.n = n

    def fit(self, X=None, y=None):
        from .green import GreenField

        self.field_ = GreenField(_check_map(self.map), self.n)
        self.tail_ = self.field_.tail_constant()
        self.bound_ = self.field_.bound()
        return self

    def transform(self, X):
        check_is_fitted(self, "field_")
        return self.field_.values(check_points(X, dim=self.map.k + 1))[:, None]


class MuSampler(BaseEstimator):
    """Atoms of the maximal-entropy measure from random backward walks."""

    def __init__(self, map=None, n=10, count=1000, seed=0, threads=None):
        self.map = map
        self.n = n
        self.count = count
        self.seed = seed
        self.threads = threads

    def fit(self, X=None, y=None):
        from .green import mu_sample

        self.measure_ = mu_sample(_check_map(self.map), self.n, self.count, self.seed, self.threads)
        return self

    def sample(self):
        check_is_fitted(self, "measure_")
        return self.measure_.points


class AttractingCurrent(BaseEstimator):
    """Normalized pushforwards of a line; ``fit`` takes the line's spanning vectors.

    ``transform`` pairs the fitted current with test forms, ``predict``
    returns the limit estimates of the default forms (or ``None``).
    """

    def __init__(self, map=None, region=None, n_max=8, tol=2e-3, quad_tol=1e-4, forms=None):
        self.map = map
        self.region = region
        self.n_max = n_max
        self.tol = tol
        self.quad_tol = quad_tol
        self.forms = forms

    def fit(self, X, y=None):
        from .attractor import attracting_current
        from .projective import LinearSubspace
        from .quadrature import RefinePolicy

        L = LinearSubspace(check_points(X))
        self.current_, self.diagnostic_ = attracting_current(
            _check_map(self.map), self.region, L, self.n_max, self.forms,
            RefinePolicy(quad_tol=self.quad_tol), self.tol, n_min=max(0, self.n_max - 3))
        return self

    def transform(self, forms):
        check_is_fitted(self, "current_")
        return np.array([self.current_.pair(fm) for fm in forms])

    def predict(self, X=None):
        check_is_fitted(self, "diagnostic_")
        return self.diagnostic_.limit_estimates


class EquilibriumMeasure(BaseEstimator):
    """Cesàro approximant of the equilibrium measure on the attracting set."""

    def __init__(self, map=None, region=None, n=8, mode="density", nodes=2_000_000, tol=1e-4,
                 lines=32, seed=0):
        self.map = map
        self.region = region
        self.n = n
        self.mode = mode
        self.nodes = nodes
        self.tol = tol
        self.lines = lines
        self.seed = seed

    def fit(self, X, y=None):
        from .equilibrium import nu_exact_small, nu_sample
        from .projective import LinearSubspace

        f = _check_map(self.map)
        L = LinearSubspace(check_points(X))
        if self.mode == "density":
            self.nu_ = nu_sample(f, self.region, L, self.n, self.nodes, self.tol)
        elif self.mode == "exact":
            self.nu_ = nu_exact_small(f, self.region, L, self.n, self.lines, self.seed)
        else:
            raise ValueError(f"mode must be 'density' or 'exact', got {self.mode!r}")
        return self

    def score(self, X=None, y=None, observables=None):
        """Negative invariance gap (larger is better)."""
        from .equilibrium import hermitian_observables, invariance_gap

        check_is_fitted(self, "nu_")
        return -invariance_gap(self.nu_, self.map, observables or hermitian_observables())


class SeparatedSetEntropy(BaseEstimator):
    """Entropy lower estimate from greedy separated subsets of a point cloud."""

    def __init__(self, map=None, n_values=(1, 2, 3, 4, 5, 6), eps_values=(0.05,), saturation=0.25):
        self.map = map
        self.n_values = n_values
        self.eps_values = eps_values
        self.saturation = saturation

    def fit(self, X, y=None):
        from .entropy import entropy_estimate, separation_run

        f = _check_map(self.map)
        cloud = check_points(X, dim=f.k + 1)
        self.runs_ = [separation_run(f, cloud, self.n_values, e) for e in self.eps_values]
        self.entropy_, self.per_eps_ = entropy_estimate(self.runs_, self.saturation)
        return self
