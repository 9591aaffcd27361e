"""Green functions, the maximal-entropy measure, and curve quasi-potentials."""
import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_points, check_positive_int, stream
from .exceptions import CenterOnCurve
from .parallel import map_chunks
from .projective import fs_distance, normalize, random_points


# -- Green function ------------------------------------------------------------

def _log_sup_ratio(f, X):
    """``log |F(x)|_inf`` at lifts with sup norm 1."""
    return np.log(np.max(np.abs(f.lift(X)), axis=1))


def tail_constant(f, samples=20000, seed=0):
    """Bound ``M`` on ``|log |F(z)|_inf|`` over the unit sup-norm sphere.

    The upper side ``log max_i sum_j |c_ij|`` is a rigorous bound; the lower
    side (smallest ``|F|_inf``) is a sampled minimum refined by local search.
    Returns ``(M, details)``.
    """
    from scipy.optimize import minimize

    C = f.component_dicts()
    upper = float(np.log(max(sum(abs(c) for c in comp.values()) for comp in C)))
    rng = np.random.default_rng(seed)
    X = random_points(f.k, samples, rng)
    vals = _log_sup_ratio(f, X)
    m = f.k + 1

    def obj(v):
        z = v[:m] + 1j * v[m:]
        s = np.max(np.abs(z))
        return float(np.log(np.max(np.abs(f.lift(z / s))))) if s > 0 else 0.0

    low = float(vals.min())
    for i in np.argsort(vals)[:3]:
        x0 = np.concatenate([X[i].real, X[i].imag])
        r = minimize(obj, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 3000})
        low = min(low, float(r.fun))
    M = max(upper, -low, float(np.abs(vals).max()), 0.0)
    if M < 1e-14:
        M = 0.0  # rounding noise of maps with |F|_inf = 1 on the sphere
    return M, {"upper_bound": upper, "sampled_min_log": low, "samples": samples, "seed": seed}


@dataclass
class GreenField:
    """Lazily evaluated ``g_n = d^-n log |F^n|_inf`` with its tail bound.

    Lifts are normalized so that the dominant coordinate equals exactly 1;
    for the power map every ``|F(x)|_inf`` is then exactly 1 and ``g_n``
    vanishes identically.
    """

    map: object
    n: int = 20
    tail: float = None
    tail_details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n = check_positive_int(self.n, "n", minimum=0)

    def tail_constant(self):
        if self.tail is None:
            self.tail, self.tail_details = tail_constant(self.map)
        return self.tail

    def bound(self, n=None):
        """Error bound ``M d^-n / (d - 1)`` for ``|g - g_n|``."""
        n = self.n if n is None else n
        d = self.map.d
        return self.tail_constant() * float(d) ** (-n) / (d - 1)

    def values(self, x, n=None):
        """``g_n`` at the given points."""
        n = self.n if n is None else int(n)
        X = normalize(check_points(x, dim=self.map.k + 1))
        d = float(self.map.d)
        g = np.zeros(X.shape[0])
        w = 1.0
        for _ in range(n):
            w /= d
            Y = self.map.lift(X)
            g += w * np.log(np.max(np.abs(Y), axis=1))
            X = normalize(Y)
        return g

    def __call__(self, x):
        return self.values(x)


def green_value(gf, x):
    """``(g_n(x), bound)``; ``bound`` controls the distance to the limit ``g``."""
    vals = gf.values(x)
    return (vals[0] if np.ndim(x) == 1 else vals), gf.bound()


def functional_equation_gap(gf, x, n=None):
    """``max |g_{n+1}(x) - g_n(f x)/d - log |F(x)|_inf / d|`` over ``x``."""
    n = gf.n if n is None else n
    f = gf.map
    X = normalize(check_points(x, dim=f.k + 1))
    lhs = gf.values(X, n + 1)
    rhs = gf.values(normalize(f.lift(X)), n) / f.d + np.log(np.max(np.abs(f.lift(X)), axis=1)) / f.d
    return float(np.max(np.abs(lhs - rhs)))


# -- discrete measures -----------------------------------------------------------

@dataclass
class DiscreteMeasure:
    """Weighted point cloud on P^k."""

    points: np.ndarray
    weights: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = check_points(self.points)
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if self.weights.shape[0] != self.points.shape[0]:
            raise ValueError("one weight per atom required")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and nonnegative")

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    def __len__(self):
        return self.points.shape[0]

    def normalized(self):
        m = self.total_mass
        return DiscreteMeasure(self.points, self.weights / m, dict(self.meta, raw_mass=m))

    def pair(self, phi):
        """``<measure, phi>`` for a vectorized observable ``phi``."""
        return float(np.dot(self.weights, np.asarray(phi(self.points), dtype=float)))

    def to_csv(self):
        k1 = self.points.shape[1]
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"{p}{i}" for i in range(k1) for p in ("re", "im")] + ["weight"])
        for x, wt in zip(self.points, self.weights):
            row = []
            for z in x:
                row += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(row + [repr(float(wt))])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text):
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, -1)
        pts = data[:, 0:-1:2] + 1j * data[:, 1:-1:2]
        return cls(pts, data[:, -1])


def mu_sample(f, n, count, seed=0, threads=None, chunk=128, start=None):
    """Equal-weight atoms from ``count`` random walks down the preimage tree.

    Each walk starts at a random point (or ``start``) and takes ``n`` steps,
    picking a preimage with probability proportional to its multiplicity.
    Walk ``i`` draws from its own stream keyed by ``(seed, i)``.
    """
    from .homotopy import solve_fibers

    count = check_positive_int(count, "count")
    n = check_positive_int(n, "n", minimum=0)
    m = f.k + 1

    def run(a, b):
        rngs = [stream(seed, i) for i in range(a, b)]
        if start is None:
            X = np.array([r.standard_normal(m) + 1j * r.standard_normal(m) for r in rngs])
        else:
            X = np.repeat(np.atleast_2d(start), b - a, axis=0).astype(np.complex128)
        X = normalize(X)
        for _ in range(n):
            fib = solve_fibers(f, X)
            X = np.array([P[r.choice(len(P), p=mu / mu.sum())] for (P, mu), r in zip(fib, rngs)])
        return X

    X = np.concatenate(map_chunks(run, count, chunk, threads))
    return DiscreteMeasure(X, np.full(count, 1.0 / count),
                           {"n": n, "seed": seed, "map": f.hash, "kind": "mu"})


def mu_full_fiber(f, a, n):
    """Exact uniform measure on ``f^-n(a)`` counted with multiplicity (small ``n``)."""
    from .homotopy import preimages

    P, mult = preimages(f, a, n)
    return DiscreteMeasure(P, mult / mult.sum(), {"n": n, "kind": "mu_fiber"})


# -- quasi-potentials -------------------------------------------------------------

class QuasiPotential:
    """A function on P^k normalized to vanish at a center point.

    ``evaluator`` maps lifted points to values of ``h``; the potential is
    ``h - h(center)``, and points projectively equal to the center get 0.
    """

    def __init__(self, evaluator, center, name="", degree=None):
        self.evaluator = evaluator
        self.center = normalize(np.asarray(center, dtype=np.complex128))
        self.name = name
        self.degree = degree
        self._h0 = float(evaluator(self.center[None])[0])
        if not np.isfinite(self._h0):
            raise CenterOnCurve("potential is singular at the center", witness=self.center)

    def __call__(self, x):
        X = check_points(x)
        with np.errstate(divide="ignore"):
            v = np.asarray(self.evaluator(X), dtype=float) - self._h0
        v[fs_distance(X, self.center) == 0] = 0.0
        return v[0] if np.ndim(x) == 1 else v


def canonical_potential_of_curve(P, center, rel_tol=1e-14):
    """Potential ``(1/D) log(|P(x)| / |x|^D)`` of ``[P = 0]/D``, zero at ``center``.

    The Euclidean norm of the lift is used, so ``dd^c`` of the result is
    ``[C]/D - omega`` with ``omega`` the normalized Fubini-Study form.
    """
    D = P.D
    if D < 1:
        raise ValueError("constant polynomial")
    c = normalize(np.asarray(center, dtype=np.complex128))
    scale = float(P.coefficient_norm())
    if abs(P.evaluate(c[None])[0]) / np.linalg.norm(c) ** D <= rel_tol * scale:
        raise CenterOnCurve("the center lies on the curve", witness=c)

    def h(X):
        X = np.atleast_2d(X)
        nx = np.linalg.norm(X, axis=1)
        with np.errstate(divide="ignore"):
            return (np.log(np.abs(P.evaluate(X / nx[:, None]))) - np.log(scale)) / D

    return QuasiPotential(h, c, name="curve", degree=D)


def line_potential(h, center):
    """Potential of a line ``{<h, x> = 0}``: ``log(|<h,x>|/(|h||x|))`` minus its center value."""
    h = np.asarray(h, dtype=np.complex128)

    def ev(X):
        X = np.atleast_2d(X)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(X @ h) / (np.linalg.norm(h) * np.linalg.norm(X, axis=1)))

    return QuasiPotential(ev, center, name="line", degree=1)


def sub_mean_value_report(qp, n_discs=100, r_max=0.01, seed=0, points=64, tol=1e-8):
    """Sub-mean-value check of a quasi-potential on small holomorphic discs.

    For a disc ``zeta -> x + zeta v`` with ``v`` orthogonal to ``x`` and
    ``|x| = |v| = 1``, the function ``qp + log|lift|`` is subharmonic, so the
    circle mean of ``qp`` minus its center value is at least
    ``-log(1 + r^2)/2``.  The report lists the worst slack.
    """
    rng = np.random.default_rng(seed)
    k1 = qp.center.shape[0]
    X = random_points(k1 - 1, n_discs, rng)
    X = X / np.linalg.norm(X, axis=1)[:, None]
    V = rng.standard_normal((n_discs, k1)) + 1j * rng.standard_normal((n_discs, k1))
    V -= np.sum(np.conj(X) * V, axis=1)[:, None] * X
    V /= np.linalg.norm(V, axis=1)[:, None]
    r = r_max * np.sqrt(rng.uniform(0.01, 1.0, n_discs))
    ang = np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    slack = np.empty(n_discs)
    for i in range(n_discs):
        ring = X[i] + (r[i] * ang)[:, None] * V[i]
        with np.errstate(invalid="ignore"):
            slack[i] = np.mean(qp(ring)) - qp(X[i]) + 0.5 * np.log1p(r[i] ** 2)
    slack = np.where(np.isnan(slack), np.inf, slack)
    return {"min_slack": float(slack.min()), "violations": int(np.sum(slack < -tol)),
            "discs": n_discs, "r_max": r_max, "seed": seed, "slack": slack}
