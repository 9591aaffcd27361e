"""Entropy estimates from separated sets and graph-volume growth."""
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree

from ._validation import check_positive_int, check_random_state
from .endomorphism import push_tangents
from .exceptions import DegenerateFit
from .projective import fs_distance, normalize, random_points, tangent_frame


def hermitian_embedding(X):
    """Real coordinates of ``x x*/|x|^2`` whose Euclidean distance is the chordal one.

    Two points at FS distance ``r`` are ``sqrt(2) sin r`` apart.
    """
    X = np.atleast_2d(X)
    X = X / np.linalg.norm(X, axis=1)[:, None]
    m = X.shape[1]
    cols = [np.abs(X[:, i]) ** 2 for i in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            p = np.sqrt(2) * X[:, i] * np.conj(X[:, j])
            cols += [p.real, p.imag]
    return np.stack(cols, axis=1)


def chordal_radius(eps):
    return np.sqrt(2) * np.sin(min(float(eps), np.pi / 2))


def orbits(f, cloud, n):
    """``[x, f x, ..., f^(n-1) x]`` as an array ``(n, N, k+1)``."""
    X = normalize(np.atleast_2d(cloud))
    out = [X]
    for _ in range(n - 1):
        X = normalize(f.lift(X))
        out.append(X)
    return np.stack(out)


def _close_pairs(orb, eps):
    """Index pairs whose orbits stay within ``eps`` at every time."""
    r = chordal_radius(eps) * (1 + 1e-12)
    emb = [hermitian_embedding(O) for O in orb]
    trees = [cKDTree(E) for E in emb]
    # the sparsest time gives the fewest candidates
    counts = [t.count_neighbors(t, r) for t in trees]
    t0 = int(np.argmin(counts))
    pairs = trees[t0].query_pairs(r, output_type="ndarray")
    if pairs.size == 0:
        return pairs.reshape(0, 2)
    keep = np.ones(pairs.shape[0], dtype=bool)
    for E in emb:
        dd = np.linalg.norm(E[pairs[:, 0]] - E[pairs[:, 1]], axis=1)
        keep &= dd <= r
    return pairs[keep]


def separated_set(f, cloud, n, eps):
    """Greedy maximal ``(n, eps)``-separated subset of ``cloud``; returns indices.

    Points are scanned in order and kept when no kept point shadows them
    within ``eps`` for ``n`` steps.  The result is a lower bound for the
    largest separated subset.
    """
    n = check_positive_int(n, "n")
    N = np.atleast_2d(cloud).shape[0]
    if N == 0:
        return np.zeros(0, dtype=int)
    pairs = _close_pairs(orbits(f, cloud, n), eps)
    # earlier neighbours of each point in CSR form
    lo, hi = np.minimum(pairs[:, 0], pairs[:, 1]), np.maximum(pairs[:, 0], pairs[:, 1])
    A = coo_matrix((np.ones(lo.size, dtype=np.int8), (hi, lo)), shape=(N, N)).tocsr()
    kept = np.zeros(N, dtype=bool)
    ptr, idx = A.indptr, A.indices
    for i in range(N):
        if not kept[idx[ptr[i]:ptr[i + 1]]].any():
            kept[i] = True
    return np.flatnonzero(kept)


def separated_count(f, cloud, n, eps):
    return int(separated_set(f, cloud, n, eps).size)


def is_separated(f, points, n, eps):
    """Direct quadratic re-check of ``(n, eps)``-separation."""
    orb = orbits(f, points, n)
    N = orb.shape[1]
    D = np.zeros((N, N))
    for O in orb:
        D = np.maximum(D, fs_distance(O[:, None, :], O[None, :, :]))
    np.fill_diagonal(D, np.inf)
    return bool(np.all(D > eps))


@dataclass
class SeparationRun:
    eps: float
    ns: list
    counts: list
    cloud_size: int
    meta: dict = field(default_factory=dict)


def separation_run(f, cloud, n_values, eps):
    ns = [int(n) for n in n_values]
    return SeparationRun(float(eps), ns, [separated_count(f, cloud, n, eps) for n in ns],
                         int(np.atleast_2d(cloud).shape[0]))


def fiber_depth(f, size):
    """Smallest ``m`` with ``d^(k m) >= size`` (at least 1)."""
    deg = f.d ** f.k
    m = 1
    while deg ** m < size:
        m += 1
    return m


def _slope(ns, vals):
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if ns.size < 4 or np.unique(ns).size < 4:
        raise DegenerateFit(f"need at least 4 distinct n values, got {ns.size}")
    if not np.all(np.isfinite(vals)):
        raise DegenerateFit("non-finite values in fit")
    return float(np.polyfit(ns, vals, 1)[0])


def entropy_estimate(runs, saturation=0.25):
    """Least-squares slope of ``log count`` against ``n`` per run.

    Counts cannot exceed the cloud size, so each fit uses only the ``n`` whose
    count is at most ``saturation`` times the cloud size; when fewer than four
    such ``n`` remain, all ``n`` are used and the run is flagged saturated.
    Returns ``(estimate, per_eps)`` where ``per_eps`` maps ``eps`` to
    ``(slope, saturated)`` and the estimate is the largest slope (the
    definition takes a supremum over ``eps``).
    """
    runs = [runs] if isinstance(runs, SeparationRun) else list(runs)
    per = {}
    for r in runs:
        ns = np.asarray(r.ns)
        counts = np.maximum(np.asarray(r.counts, dtype=float), 1)
        window = counts <= saturation * r.cloud_size
        saturated = int(window.sum()) < 4
        if saturated:
            window[:] = True
        per[r.eps] = (_slope(ns[window], np.log(counts[window])), saturated)
    return max(v[0] for v in per.values()), per


# -- graph volume ------------------------------------------------------------------

def _gram(f, X, E1, E2, i):
    """Hermitian Gram matrices of ``D f^i`` on the frame ``(E1, E2)``, by polarization."""
    def s2(V):
        return np.exp(push_tangents(f, X, V, i)[2])

    g11, g22 = s2(E1), s2(E2)
    gp = s2((E1 + E2) / np.sqrt(2))
    gq = s2((E1 + 1j * E2) / np.sqrt(2))
    re = gp - (g11 + g22) / 2
    im = gq - (g11 + g22) / 2
    return g11, g22, re - 1j * im


@dataclass
class VolumeGrowthRun:
    ns: list
    volumes: list
    stderr: list
    region_volume: float
    rate: float = None
    meta: dict = field(default_factory=dict)


def graph_volume(f, W, n, mc_points=20_000, seed=0):
    """Volume of the ``n``-step graph over ``W``: ``(1/2) int_W (sum_{i<n} (f^i)^* omega)^2``.

    Monte Carlo over FS-uniform points; at each point the sum of pulled-back
    forms is a Hermitian 2x2 matrix ``S`` in an orthonormal frame and the
    integrand is ``det S``.  ``W`` is a region with a ``contains`` method or
    ``None`` for the whole plane.  Returns ``(volume, standard error)``; for
    ``n = 1`` this is the FS volume ``(1/2) vol(W)`` (whole plane: 1/2).
    """
    n = check_positive_int(n, "n")
    rng = check_random_state(seed)
    X = random_points(f.k, mc_points, rng)
    ind = np.ones(mc_points, dtype=bool) if W is None else np.asarray(W.contains(X), dtype=bool)
    Xw = X[ind]
    E = tangent_frame(Xw)
    E1, E2 = E[:, 0], E[:, 1]
    a = np.zeros(Xw.shape[0])
    c = np.zeros(Xw.shape[0])
    b = np.zeros(Xw.shape[0], dtype=complex)
    for i in range(n):
        g11, g22, g12 = _gram(f, Xw, E1, E2, i)
        a += g11
        c += g22
        b += g12
    det = np.maximum(a * c - np.abs(b) ** 2, 0.0)
    vals = np.zeros(mc_points)
    vals[ind] = 0.5 * det
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(mc_points))


def volume_growth(f, W, n_values, mc_points=20_000, seed=0, absorb_poly=False):
    """Graph volumes over ``n_values`` (shared sample) and the fitted exponential rate.

    With ``absorb_poly`` the polynomial factor ``n^k`` is removed before the fit.
    """
    ns = [int(n) for n in n_values]
    vols, errs = [], []
    for n in ns:
        v, e = graph_volume(f, W, n, mc_points, seed)
        vols.append(v)
        errs.append(e)
    logs = np.log(vols)
    if absorb_poly:
        logs = logs - f.k * np.log(ns)
    run = VolumeGrowthRun(ns, vols, errs, graph_volume(f, W, 1, mc_points, seed)[0])
    run.rate = _slope(ns, logs)
    run.meta = {"mc_points": mc_points, "seed": seed, "absorb_poly": absorb_poly}
    return run
