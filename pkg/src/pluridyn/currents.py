"""Sampled positive closed (1,1)-currents on P^2 and their diagnostics.

A current is a list of weighted nodes ``(point, unit tangent, weight)``;
weights are normalized Fubini-Study areas, so pairing with a (1,1)-test form
is a weighted sum of the form's density along the tangent direction.
"""
import csv
import io
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .endomorphism import push_tangents
from .exceptions import DegenerateFit, ThetaOutOfDomain, WrongDimension
from .projective import LinearSubspace, fs_norm2, orthogonal_part, sup_normalize
from .quadrature import RefinePolicy, adaptive_line_quadrature, line_lift, uniform_line_grid


@dataclass
class LineSource:
    """Provenance of a current obtained by pushing a line forward."""

    a: np.ndarray
    b: np.ndarray
    map: object = None
    steps: int = 0

    def to_dict(self):
        enc = lambda v: [[float(z.real), float(z.imag)] for z in v]
        return {"a": enc(self.a), "b": enc(self.b), "steps": int(self.steps),
                "map": None if self.map is None else self.map.hash}


@dataclass
class SampledCurrent:
    points: np.ndarray
    tangents: np.ndarray
    weights: np.ndarray
    generation: int = 0
    mass_scale: float = 1.0
    source: LineSource = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=np.complex128))
        self.tangents = np.atleast_2d(np.asarray(self.tangents, dtype=np.complex128))
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if not (self.points.shape == self.tangents.shape and self.points.shape[0] == self.weights.shape[0]):
            raise ValueError("points, tangents and weights must have matching lengths")

    def __len__(self):
        return self.weights.shape[0]

    @property
    def raw_mass(self):
        """Unnormalized mass ``sum w``."""
        return float(np.sum(self.weights))

    def mass(self):
        """Normalized mass ``mass_scale * sum w``."""
        return self.mass_scale * self.raw_mass

    def pair(self, form):
        return pair(self, form)

    def scaled(self, c):
        return SampledCurrent(self.points, self.tangents, self.weights * c, self.generation,
                              self.mass_scale, self.source, dict(self.meta))

    # -- serialization --------------------------------------------------------

    def to_csv(self):
        m = self.points.shape[1]
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        head = [f"{p}_x{i}" for i in range(m) for p in ("re", "im")]
        head += [f"{p}_t{i}" for i in range(m) for p in ("re", "im")]
        w.writerow(head + ["weight"])
        for x, t, wt in zip(self.points, self.tangents, self.weights):
            row = []
            for z in np.concatenate([x, t]):
                row += [repr(float(z.real)), repr(float(z.imag))]
            w.writerow(row + [repr(float(wt))])
        return out.getvalue()

    def sidecar(self, **extra):
        d = {"generation": int(self.generation), "mass_scale": float(self.mass_scale),
             "nodes": len(self), "source": None if self.source is None else self.source.to_dict()}
        d.update(self.meta)
        d.update(extra)
        return d

    def write(self, stem, **extra):
        """Write ``<stem>.csv`` and ``<stem>.json``."""
        with open(f"{stem}.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        with open(f"{stem}.json", "w", encoding="utf-8") as fh:
            json.dump(self.sidecar(**extra), fh, indent=2, sort_keys=True)

    @classmethod
    def from_csv(cls, text, sidecar=None):
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        m = (data.shape[1] - 1) // 4
        z = data[:, :-1:2] + 1j * data[:, 1:-1:2]
        sc = sidecar or {}
        return cls(z[:, :m], z[:, m:], data[:, -1], sc.get("generation", 0), sc.get("mass_scale", 1.0))


# -- test forms -----------------------------------------------------------------

class TestForm:
    """A smooth (1,1)-form evaluated through its density along unit tangents.

    ``density(X, T)`` returns ``Phi(t, conj t) / omega(t, conj t)`` at each
    node, which for a current of integration is the integrand against
    normalized FS area.  ``closed`` records whether ``dd^c Phi = 0``.
    """

    __test__ = False  # not a pytest class

    def __init__(self, density, kind="custom", name="", closed=False, parts=None):
        self._density = density
        self.kind = kind
        self.name = name
        self.closed = closed
        self.parts = parts or [(1.0, self)]

    def __call__(self, X, T):
        return np.asarray(self._density(X, T), dtype=float)

    def __add__(self, other):
        parts = self.parts + other.parts
        return TestForm(lambda X, T: self(X, T) + other(X, T), "combination",
                        f"({self.name}+{other.name})", self.closed and other.closed, parts)

    def __rmul__(self, c):
        c = float(c)
        return TestForm(lambda X, T: c * self(X, T), "combination", f"{c:g}*{self.name}",
                        self.closed, [(c * a, p) for a, p in self.parts])

    def __repr__(self):
        return f"TestForm({self.kind}, {self.name})"


def omega():
    """The normalized Fubini-Study form (density 1)."""
    return TestForm(lambda X, T: np.ones(np.atleast_2d(X).shape[0]), "pulled_omega", "omega", True)


def cutoff_omega(chi, name="chi"):
    """``chi * omega`` for a smooth scalar ``chi`` on lifts."""
    return TestForm(lambda X, T: chi(X), "cutoff_omega", name, False)


def pulled_omega(A, name="A*omega"):
    """``A^* omega`` for an invertible (or degenerate) linear map ``A``."""
    A = np.asarray(A, dtype=np.complex128)

    def dens(X, T):
        return fs_norm2(X @ A.T, T @ A.T) / fs_norm2(X, T)

    return TestForm(dens, "pulled_omega", name, True)


def cutoff_pulled_omega(chi, A, name="chi*A*omega"):
    A = np.asarray(A, dtype=np.complex128)
    po = pulled_omega(A)
    return TestForm(lambda X, T: chi(X) * po(X, T), "cutoff_omega", name, False)


def coordinate_weight(i):
    """``|z_i|^2 / |z|^2``."""
    return lambda X: np.abs(np.atleast_2d(X)[:, i]) ** 2 / np.sum(np.abs(np.atleast_2d(X)) ** 2, axis=1)


def strictly_psh_form(i=2):
    """``(|z_i|^2/|z|^2) omega``.

    ``chi = |z_i|^2/|z|^2`` satisfies ``Delta chi = c (1/3 - chi)`` with
    ``c > 0`` for the FS Laplacian, so ``dd^c(chi omega) = dd^c chi ^ omega``
    is strictly positive wherever ``chi < 1/3``, in particular near the line
    ``{z_i = 0}``.
    """
    return cutoff_omega(coordinate_weight(i), f"w{i}*omega")


def bump(center, width):
    """Smooth bump ``exp(-(dist/width)^2)`` around a point (chordal distance)."""
    c = np.asarray(center, dtype=np.complex128)
    c = c / np.linalg.norm(c)

    def chi(X):
        X = np.atleast_2d(X)
        cos2 = np.abs(X @ np.conj(c)) ** 2 / np.sum(np.abs(X) ** 2, axis=1)
        return np.exp(-(1 - cos2) / width ** 2)

    return chi


def pullback_form(form, f, n):
    """``d^-n (f^n)^* Phi`` evaluated through tangent stretches."""
    def dens(X, T):
        Y, W, ls = push_tangents(f, X, T, n)
        return form(Y, W) * np.exp(ls) * float(f.d) ** (-n)

    return TestForm(dens, "custom", f"pullback^{n}({form.name})", form.closed)


def pair(S, form):
    """``<S, Phi> = sum w mass_scale Phi(x, t)``."""
    return float(S.mass_scale * np.dot(S.weights, form(S.points, S.tangents)))


# -- line currents and pushforward ----------------------------------------------

def _as_line(L):
    if isinstance(L, LinearSubspace):
        sub = L
    else:
        sub = LinearSubspace(np.asarray(L, dtype=np.complex128))
    if sub.dimension != 1:
        raise WrongDimension(f"expected a projective line, got dimension {sub.dimension}")
    return sub


def line_current(L, nodes=4096):
    """Tensor quadrature of ``[L]`` with about ``nodes`` nodes (mass 1)."""
    sub = _as_line(L)
    a, b = sub.orthonormal_basis
    n_u = max(2, int(round(np.sqrt(nodes))))
    n_phi = max(2, int(np.ceil(nodes / n_u)))
    u, p, w = uniform_line_grid(n_u, n_phi)
    X, T = line_lift(a, b, u, p)
    return SampledCurrent(X, T, w, 0, 1.0, LineSource(a, b, None, 0))


def _push_evaluator(src, f, steps, forms):
    def ev(u, p):
        X, T = line_lift(src.a, src.b, u, p)
        Y, W, ls = push_tangents(f, X, T, steps)
        s2 = np.exp(ls)
        cols = [s2] + [s2 * fm(Y, W) for fm in forms]
        return {"values": np.stack(cols, axis=1), "points": Y, "tangents": W, "stretch2": s2}
    return ev


def adaptive_pushforward(L, f, steps, policy=None, forms=()):
    """``(f^steps)_*[L]`` by adaptive quadrature on the parameter sphere of ``L``.

    The integrand controlled by the refinement is the image area density
    together with the densities of ``forms``, so pairings with those forms
    are accurate to the policy tolerance.
    """
    sub = _as_line(L)
    a, b = sub.orthonormal_basis
    src = LineSource(a, b, f, int(steps))
    nodes, integral, info = adaptive_line_quadrature(_push_evaluator(src, f, int(steps), forms), policy)
    w = nodes["w"] * nodes["stretch2"]
    keep = w > 0
    S = SampledCurrent(nodes["points"][keep], nodes["tangents"][keep], w[keep], int(steps),
                       float(f.d) ** (-int(steps)), src, {"quadrature": info})
    return S


def pushforward(S, f, steps, refine=None, forms=()):
    """``d^-steps (f^steps)_* S``.

    With a refinement policy and a current that remembers the line it came
    from, the image is recomputed adaptively from the line; otherwise nodes
    are pushed directly and reweighted by the squared tangent stretch.
    """
    steps = int(steps)
    if steps == 0:
        return S
    if refine is not None and S.source is not None and S.source.map in (None, f):
        L = np.stack([S.source.a, S.source.b])
        out = adaptive_pushforward(L, f, S.source.steps + steps, refine, forms)
        out.mass_scale = S.mass_scale * float(f.d) ** (-steps)
        out.generation = S.generation + steps
        return out
    Y, W, ls = push_tangents(f, S.points, S.tangents, steps)
    src = None
    if S.source is not None and S.source.map in (None, f):
        src = LineSource(S.source.a, S.source.b, f, S.source.steps + steps)
    return SampledCurrent(Y, W, S.weights * np.exp(ls), S.generation + steps,
                          S.mass_scale * float(f.d) ** (-steps), src, dict(S.meta))


def push_linear(S, M):
    """Pushforward of ``S`` by the linear map ``M`` (weights times stretch^2)."""
    M = np.asarray(M, dtype=np.complex128)
    X = S.points @ M.T
    T = S.tangents @ M.T
    s2 = fs_norm2(X, T) / fs_norm2(S.points, S.tangents)
    Tn = orthogonal_part(X, T)
    nrm = np.sqrt(np.maximum(fs_norm2(X, Tn), 1e-300))
    c = np.max(np.abs(X), axis=1)
    return SampledCurrent(X / c[:, None], Tn / (nrm * c)[:, None], S.weights * s2,
                          S.generation, S.mass_scale, None, dict(S.meta))


def concat(currents, coeffs=None):
    coeffs = [1.0] * len(currents) if coeffs is None else coeffs
    return SampledCurrent(np.concatenate([c.points for c in currents]),
                          np.concatenate([c.tangents for c in currents]),
                          np.concatenate([a * c.weights * c.mass_scale for a, c in zip(coeffs, currents)]),
                          currents[0].generation, 1.0)


# -- structural discs ------------------------------------------------------------

def default_automorphisms(k=2, count=4, radius=0.02, seed=0):
    """Unitary automorphisms ``exp(i radius H)`` near the identity, equal weights."""
    from scipy.linalg import expm

    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(count):
        H = rng.standard_normal((k + 1, k + 1)) + 1j * rng.standard_normal((k + 1, k + 1))
        H = (H + H.conj().T) / 2
        mats.append(expm(1j * radius * H))
    return mats, np.full(count, 1.0 / count)


class StructuralDisc:
    """The holomorphic family ``theta -> R_theta`` built from a base current.

    ``R_theta = sum_i rho_i (lambda_theta(A_i))_* (A_theta)_* R`` with
    ``A_theta`` the fiber scaling of the projection and
    ``lambda_theta(A) = Id + (1 - theta)(A - Id)``.  At ``theta = 1`` this is
    ``R``; at ``theta = 0`` it depends on ``R`` only through its mass.
    """

    def __init__(self, base, projection, automorphisms=None, rho=None, v_radius=0.2):
        self.base = base
        self.projection = projection
        k = projection.k
        if automorphisms is None:
            automorphisms, rho = [np.eye(k + 1)], np.ones(1)
        self.automorphisms = [np.asarray(A, dtype=np.complex128) for A in automorphisms]
        rho = np.full(len(self.automorphisms), 1.0 / len(self.automorphisms)) if rho is None else np.asarray(rho, float)
        if np.any(rho <= 0) or abs(rho.sum() - 1) > 1e-12:
            raise ValueError("rho must be positive weights summing to 1")
        self.rho = rho
        self.v_radius = float(v_radius)

    def in_domain(self, theta):
        t = complex(theta)
        x = min(max(t.real, 0.0), 1.0)
        return abs(t - x) <= self.v_radius

    def matrix(self, theta, A):
        m = A.shape[0]
        lam = np.eye(m) + (1 - theta) * (A - np.eye(m))
        return lam @ self.projection.fiber_matrix(theta)

    def evaluate(self, theta):
        if not self.in_domain(theta):
            raise ThetaOutOfDomain(f"theta={theta} is outside the disc domain")
        parts = [push_linear(self.base, self.matrix(theta, A)) for A in self.automorphisms]
        out = concat(parts, list(self.rho))
        out.meta = {"theta": [float(np.real(theta)), float(np.imag(theta))]}
        return out

    def pairing(self, form, theta):
        return pair(self.evaluate(theta), form)


def disc_evaluate(D, theta):
    return D.evaluate(theta)


def subharmonicity_report(D, form, theta_grid, radii, points=32, tol_sh=1e-3):
    """Circle-mean deficits of ``theta -> <R_theta, Phi>``.

    For each centre and radius, ``mean over the circle - value at centre``.
    Deficits below ``-tol_sh`` are flagged.
    """
    ang = np.exp(2j * np.pi * np.arange(points) / points)
    rows = []
    for th in theta_grid:
        for r in radii:
            circle = th + r * ang
            if not all(D.in_domain(c) for c in circle):
                raise ThetaOutOfDomain(f"circle around {th} of radius {r} leaves the domain")
            centre = D.pairing(form, th)
            mean = float(np.mean([D.pairing(form, c) for c in circle]))
            rows.append((complex(th), float(r), mean - centre, centre))
    deficits = np.array([r[2] for r in rows])
    return {"rows": rows, "deficits": deficits, "min_deficit": float(deficits.min()),
            "max_abs_deficit": float(np.abs(deficits).max()),
            "flagged": int(np.sum(deficits < -tol_sh)), "tol_sh": tol_sh, "closed": form.closed}


def slice_mass_scan(D, theta_grid):
    """Masses ``<R_theta, omega>`` over the grid."""
    w = omega()
    return [D.pairing(w, th) for th in theta_grid]


def disc_regularity(D, form, radii, directions=8):
    """Fitted ``c`` in ``|<R_theta,Phi> - <R_0,Phi>| <= c |theta|`` for small ``theta``."""
    p0 = D.pairing(form, 0.0)
    ratios = []
    for r in radii:
        for j in range(directions):
            th = r * np.exp(2j * np.pi * j / directions)
            ratios.append(abs(D.pairing(form, th) - p0) / r)
    return float(max(ratios))


# -- derivatives of scalar functions along curves ---------------------------------

def levi_ratio(h, X, T, delta=1e-3, points=8):
    """``dd^c h`` restricted to the line through ``x`` in direction ``t``, over ``omega``.

    Circle-average finite difference of ``s -> h(x + s t)``; for ``h =
    log|z|^2`` the ratio is 2.
    """
    X = np.atleast_2d(X)
    T = np.atleast_2d(T)
    nx = np.linalg.norm(X, axis=1)
    Tp = orthogonal_part(X, T)
    Tp = Tp * (nx / np.linalg.norm(Tp, axis=1))[:, None]  # |t| = |x|
    d = delta
    ang = np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    acc = np.zeros(X.shape[0])
    for a in ang:
        acc += h(X + d * a * Tp)
    lap = 4 * (acc / points - h(X)) / d ** 2
    return lap / 2


def holo_derivative(h, X, V, delta=1e-5):
    """``d/ds h(x + s v)`` at ``s = 0`` (the (1,0)-part of ``dh`` on ``v``)."""
    dx = (h(X + delta * V) - h(X - delta * V)) / (2 * delta)
    dy = (h(X + 1j * delta * V) - h(X - 1j * delta * V)) / (2 * delta)
    return 0.5 * (dx - 1j * dy)


def _fit_slope(ns, vals, floor):
    vals = np.abs(np.asarray(vals, dtype=float))
    if np.any(vals <= floor):
        raise DegenerateFit(f"values reach the noise floor {floor:g}: {vals}")
    A = np.vstack([ns, np.ones_like(ns)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(vals), rcond=None)
    return float(coef[0])


def decay_rates(L, f, phi, Phi_family, theta_forms, n_range, policy=None, floor=1e-13, fit=True):
    """Decay of ``dd^c`` and ``d`` of ``d^-n (f^n)_*(phi [L])``.

    ``a_n = <d^-n (f^n)_*(phi [L]), dd^c Phi>`` is computed after
    integration by parts on the curve as ``d^-n int_L (Phi o f^n) dd^c phi``.
    ``b_n = <d^-n (f^n)_*(phi [L]), d Theta>`` for ``Theta = h1 dbar h2``
    reduces to ``d^-n int_L dphi ^ (f^n)^* Theta``.  Returns the sequences
    and least-squares slopes of their logarithms in ``n``.

    Only the totals matter here, so ``quad_tol`` is applied to each whole
    integral: a cell may carry its area share of the error budget even where
    the integrand nearly vanishes.  The finite-difference derivatives are not
    accurate to a relative ``quad_tol`` near such zeros.
    """
    policy = replace(policy or RefinePolicy(), abs_floor=1.0)
    sub = _as_line(L)
    a, b = sub.orthonormal_basis
    ns = np.array(list(n_range), dtype=float)
    A = np.zeros((len(ns), len(Phi_family)))
    B = np.zeros((len(ns), len(theta_forms)))
    for i, n in enumerate(ns.astype(int)):
        def ev(u, p, n=n):
            X, T = line_lift(a, b, u, p)
            Y, W, ls = push_tangents(f, X, T, n)
            st = np.exp(0.5 * ls)
            lev = levi_ratio(phi, X, T)
            dphi = holo_derivative(phi, X, T)
            cols = [lev * Phi(Y) for Phi in Phi_family]
            for h1, h2 in theta_forms:
                v = dphi * h1(Y) * np.conj(holo_derivative(h2, Y, W)) * st
                cols += [v.real, v.imag]
            return {"values": np.stack(cols, axis=1)}

        _, integ, _ = adaptive_line_quadrature(ev, policy)
        dn = float(f.d) ** (-n)
        A[i] = integ[:len(Phi_family)] * dn
        c = integ[len(Phi_family):].reshape(-1, 2)
        B[i] = np.hypot(c[:, 0], c[:, 1]) * dn
    out = {"n": ns, "a": A, "b": B}
    if fit:
        out["slope_a"] = [_fit_slope(ns, A[:, j], floor) for j in range(A.shape[1])]
        out["slope_b"] = [_fit_slope(ns, B[:, j], floor) for j in range(B.shape[1])]
    return out
