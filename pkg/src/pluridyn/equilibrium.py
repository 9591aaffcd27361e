"""The equilibrium measure of an attracting set, via Cesàro averages of curve pullbacks.

For a line ``L'`` the measure

    nu_n = (1/n) sum_{j<n} d^-n (f^j)_*[L'] ^ (f^(n-j))^* omega

has mass 1.  Its restriction to the curve ``f^j(L')`` has density
``|D f^(n-j) t|^2`` against curve area, so parametrizing by ``L'`` every
term carries the same weight ``w |D f^n t|^2 d^-n / n`` and only the atom
location ``f^j(x)`` depends on ``j``.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int, stream
from .endomorphism import push_tangents
from .green import DiscreteMeasure
from .projective import LinearSubspace, normalize
from .quadrature import RefinePolicy, adaptive_line_quadrature, line_lift


@dataclass
class NuApproximant:
    measure: DiscreteMeasure
    n: int
    mode: str
    raw_mass: float
    params: dict = field(default_factory=dict)

    @property
    def points(self):
        return self.measure.points

    @property
    def weights(self):
        return self.measure.weights

    def pair(self, phi):
        return self.measure.pair(phi)

    def sidecar(self):
        return {"n": self.n, "mode": self.mode, "raw_mass": self.raw_mass, **self.params}

    def write(self, stem):
        with open(f"{stem}.csv", "w", encoding="utf-8") as fh:
            fh.write(self.measure.to_csv())
        with open(f"{stem}.json", "w", encoding="utf-8") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True)


def hermitian_observables():
    """Bounded smooth observables ``Re/Im(z_i conj z_j) / |z|^2`` and ``|z_i|^2/|z|^2``."""
    def make(i, j, part):
        def phi(X):
            X = np.atleast_2d(X)
            v = X[:, i] * np.conj(X[:, j]) / np.sum(np.abs(X) ** 2, axis=1)
            return v.real if part == "re" else v.imag
        phi.__name__ = f"{part}{i}{j}"
        return phi

    obs = [make(0, 0, "re"), make(1, 1, "re"), make(0, 1, "re"), make(0, 1, "im"), make(0, 2, "re")]
    return obs


def _line_basis(L):
    sub = L if isinstance(L, LinearSubspace) else LinearSubspace(np.asarray(L, dtype=np.complex128))
    return sub, sub.orthonormal_basis


def nu_sample(f, U, L, n, nodes=2_000_000, tol=1e-4, control=None):
    """Density-mode approximant ``nu_n`` from adaptive quadrature on ``L``.

    ``nodes`` caps the quadrature budget.  ``control`` lists observables whose
    values along every intermediate curve join the refinement criterion
    (default: all Hermitian observables, so phase-dependent ones are resolved
    even though the image curves wind ``d^j`` times).
    """
    n = check_positive_int(n, "n", minimum=0)
    sub, (a, b) = _line_basis(L)
    control = hermitian_observables() if control is None else list(control)
    d = float(f.d)
    steps = max(n, 1)

    def ev(u, p):
        X, T = line_lift(a, b, u, p)
        pts = [X]
        ls = np.zeros(X.shape[0])
        Y, W = X, T
        for _ in range(n):
            Y, W, s = push_tangents(f, Y, W, 1)
            ls = ls + s
            pts.append(Y)
        dens = np.exp(ls) * d ** (-n)
        cols = [dens]
        for phi in control:
            cols.append(dens * sum(phi(P) for P in pts[:steps]) / steps)
        return {"values": np.stack(cols, axis=1), "points": np.stack(pts[:steps], axis=1), "dens": dens}

    pol = RefinePolicy(quad_tol=tol, max_nodes=nodes)
    nd, integral, info = adaptive_line_quadrature(ev, pol)
    w = nd["w"] * nd["dens"] / steps
    P = nd["points"]  # (N, steps, k+1), ordered by (node, j)
    # atoms sorted by (j, node index)
    pts = np.transpose(P, (1, 0, 2)).reshape(-1, P.shape[2])
    wts = np.tile(w, steps)
    keep = wts > 0
    raw = float(wts.sum())
    meas = DiscreteMeasure(normalize(pts[keep]), wts[keep] / raw,
                           {"kind": "nu", "mode": "density", "n": n, "map": f.hash})
    params = {"map": f.hash, "line": [[[float(z.real), float(z.imag)] for z in v] for v in (a, b)],
              "nodes": int(info["nodes"]), "tol": tol,
              "region": None if U is None else U.spec()}
    return NuApproximant(meas, n, "density", raw, params)


def nu_exact_small(f, U, L, n, lines=32, seed=0):
    """Exact-mode approximant via Bézout intersections.

    ``(f^m)^* omega`` is replaced by the Crofton average of ``(f^m)^*[H]``
    over ``lines`` FS-random lines ``H``; each image curve ``f^j(L')`` is
    intersected with the pullback curves.
    """
    from .algebraic import HomPoly2, implicitize_image, intersect_curves, pullback_line_by_iterate
    from .exceptions import ResultantOverflow

    n = check_positive_int(n, "n")
    if n > 4 or f.d != 2 or f.k != 2:
        raise ResultantOverflow("exact mode is limited to n <= 4 with k = 2, d = 2")
    sub, (a, b) = _line_basis(L)
    curves = []
    for j in range(n):
        if j == 0:
            curves.append((HomPoly2.linear(np.cross(a, b)), 1))
        else:
            img = implicitize_image(sub, f, j)
            curves.append((img.poly, img.multiplicity))
    d = float(f.d)
    pts, wts = [], []
    for i in range(lines):
        rng = stream(seed, i)
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        for j, (C, mult) in enumerate(curves):
            Q = pullback_line_by_iterate(f, h, n - j)
            X, m = intersect_curves(C, Q, seed=seed + i)
            pts.append(X)
            wts.append(mult * m * d ** (-n) / n / lines)
    pts = np.concatenate(pts)
    wts = np.concatenate(wts).astype(float)
    raw = float(wts.sum())
    meas = DiscreteMeasure(normalize(pts), wts / raw, {"kind": "nu", "mode": "exact", "n": n, "map": f.hash})
    return NuApproximant(meas, n, "exact", raw, {"map": f.hash, "lines": lines, "seed": seed})


def invariance_gap(nu, f, observables):
    """``max |<nu, phi o f> - <nu, phi>|`` over the observables."""
    X = nu.points
    Y = normalize(f.lift(X))
    w = nu.weights
    return float(max(abs(np.dot(w, phi(Y)) - np.dot(w, phi(X))) for phi in observables))


def mixing_correlation(nu, f, phi, psi, n_range, centering="covariance"):
    """Correlations of ``phi`` and ``psi o f^n`` under ``nu``.

    ``centering="product"`` subtracts ``<nu, phi><nu, psi>``.  The default
    ``"covariance"`` subtracts ``<nu, phi><nu, psi o f^n>``; both agree for an
    invariant measure, but a Cesàro approximant of order ``N`` drifts by
    ``O(min(n, N)/N)`` under ``f^n`` and only the covariance cancels that drift.
    """
    if centering not in ("covariance", "product"):
        raise ValueError(f"unknown centering {centering!r}")
    X = nu.points
    w = nu.weights
    a = phi(X)
    mp, ms = float(np.dot(w, a)), float(np.dot(w, psi(X)))
    ns = sorted(int(n) for n in n_range)
    out = []
    Y, cur = X, 0
    for n in ns:
        if n > cur:
            Y = f.iterate(Y, n - cur)
            cur = n
        b = psi(Y)
        centre = float(np.dot(w, b)) if centering == "covariance" else ms
        out.append(float(np.dot(w, a * b) - mp * centre))
    return out


def max_atom(nu):
    return float(nu.weights.max())


def envelope(values):
    """Upper envelope ``max_{m >= n} |C_m|`` (non-increasing by construction)."""
    v = np.abs(np.asarray(values, dtype=float))
    return np.maximum.accumulate(v[::-1])[::-1]


def envelope_decreasing(values, ratio=0.5):
    """True when the envelope at the end is below ``ratio`` times its start."""
    env = envelope(values)
    return bool(env[-1] < ratio * env[0])
