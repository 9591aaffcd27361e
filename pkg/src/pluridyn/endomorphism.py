"""Holomorphic endomorphisms of P^k given by homogeneous polynomials."""
import hashlib
from dataclasses import dataclass, field
from math import comb

import numpy as np

from ._validation import check_points, check_random_state
from .exceptions import DegenerateMap, MapFormatError
from .projective import fs_norm2, normalize, orthogonal_part, sup_normalize


class ProjectiveMap:
    """``f = [F_0 : ... : F_k]`` with each ``F_i`` homogeneous of degree ``d``.

    Parameters
    ----------
    k : int
        Dimension of the projective space.
    d : int
        Algebraic degree.
    terms : iterable of (component, exponents, coefficient)
        Sparse monomial list.  Repeated monomials are summed.
    """

    def __init__(self, k, d, terms):
        self.k = int(k)
        self.d = int(d)
        if self.k < 1 or self.d < 1:
            raise MapFormatError(f"need k >= 1 and d >= 1, got k={k}, d={d}")
        acc = {}
        for comp, exps, coef in terms:
            exps = tuple(int(e) for e in exps)
            comp = int(comp)
            if len(exps) != self.k + 1:
                raise MapFormatError(f"monomial {exps} has {len(exps)} exponents, expected {self.k + 1}")
            if not 0 <= comp <= self.k:
                raise MapFormatError(f"component index {comp} out of range")
            if min(exps) < 0 or sum(exps) != self.d:
                raise MapFormatError(f"monomial {exps} in component {comp} is not homogeneous of degree {self.d}")
            acc[(comp, exps)] = acc.get((comp, exps), 0) + complex(coef)
        acc = {key: c for key, c in acc.items() if c != 0}
        if not acc:
            raise MapFormatError("map has no nonzero terms")
        keys = sorted(acc)
        self.terms = [(c, e, acc[(c, e)]) for c, e in keys]
        self._comp = np.array([c for c, _, _ in self.terms])
        self._exps = np.array([e for _, e, _ in self.terms], dtype=int)
        self._coef = np.array([v for _, _, v in self.terms], dtype=np.complex128)
        M = len(self.terms)
        self._C = np.zeros((M, self.k + 1), dtype=np.complex128)
        self._C[np.arange(M), self._comp] = self._coef

    # -- evaluation ---------------------------------------------------------
    def _powers(self, Z):
        P = np.empty((self.d + 1,) + Z.shape, dtype=np.complex128)
        P[0] = 1.0
        for p in range(1, self.d + 1):
            P[p] = P[p - 1] * Z
        return P

    def lift(self, Z):
        """Evaluate the polynomial lift ``F`` on rows of ``Z``."""
        Z = np.asarray(Z, dtype=np.complex128)
        P = self._powers(Z)
        mon = np.ones(Z.shape[:-1] + (len(self.terms),), dtype=np.complex128)
        for i in range(self.k + 1):
            mon = mon * np.moveaxis(P[self._exps[:, i], ..., i], 0, -1)
        return mon @ self._C

    def jacobian(self, Z):
        """Matrix ``dF_i/dz_j`` at each row of ``Z``, shape ``(N, k+1, k+1)``."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        P = self._powers(Z)
        m = self.k + 1
        J = np.zeros((Z.shape[0], m, m), dtype=np.complex128)
        base = [np.moveaxis(P[self._exps[:, i], :, i], 0, -1) for i in range(m)]
        for j in range(m):
            e = self._exps[:, j]
            mask = e > 0
            if not np.any(mask):
                continue
            dm = np.moveaxis(P[np.maximum(e - 1, 0), :, j], 0, -1) * e
            for i in range(m):
                if i != j:
                    dm = dm * base[i]
            dm = dm * mask
            J[:, :, j] = dm @ self._C
        return J

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        """Normalized image ``f(x)``."""
        X = check_points(x, dim=self.k + 1)
        out = normalize(self.lift(sup_normalize(X)))
        return out[0] if np.ndim(x) == 1 else out

    def iterate(self, x, n):
        """``f^n(x)``, renormalizing after every step."""
        X = sup_normalize(check_points(x, dim=self.k + 1))
        for _ in range(int(n)):
            X = sup_normalize(self.lift(X))
        out = normalize(X)
        return out[0] if np.ndim(x) == 1 else out

    # -- bookkeeping --------------------------------------------------------
    def to_text(self, header="pmap"):
        lines = [f"{header} k={self.k} d={self.d}"]
        for comp, exps, c in self.terms:
            lines.append(" ".join([str(comp)] + [str(e) for e in exps] + [repr(float(c.real)), repr(float(c.imag))]))
        return "\n".join(lines) + "\n"

    @property
    def hash(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def component_dicts(self):
        """Per-component ``{exponents: coefficient}`` dictionaries."""
        out = [dict() for _ in range(self.k + 1)]
        for comp, exps, c in self.terms:
            out[comp][exps] = c
        return out

    def __repr__(self):
        return f"ProjectiveMap(k={self.k}, d={self.d}, terms={len(self.terms)}, hash={self.hash})"

    def __eq__(self, other):
        return isinstance(other, ProjectiveMap) and self.to_text() == other.to_text()

    def __hash__(self):
        return hash(self.to_text())


# -- file format -------------------------------------------------------------

def parse_map_terms(text, header="pmap"):
    """Split the monomial-line format into ``(k, d, terms)``.

    First non-blank line ``<header> k=<int> d=<int>``, then one
    ``component e_0 ... e_k re im`` line per monomial.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MapFormatError("empty map definition")
    head = lines[0].split()
    if len(head) != 3 or head[0] != header or not head[1].startswith("k=") or not head[2].startswith("d="):
        raise MapFormatError(f"bad header {lines[0]!r}; expected '{header} k=<int> d=<int>'")
    try:
        k = int(head[1][2:])
        d = int(head[2][2:])
    except ValueError as exc:
        raise MapFormatError(f"bad header {lines[0]!r}") from exc
    terms = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != k + 4:
            raise MapFormatError(f"monomial line {ln!r} must have {k + 4} fields")
        try:
            comp = int(parts[0])
            exps = [int(p) for p in parts[1:k + 2]]
            coef = complex(float(parts[k + 2]), float(parts[k + 3]))
        except ValueError as exc:
            raise MapFormatError(f"cannot parse monomial line {ln!r}") from exc
        if min(exps) < 0 or sum(exps) != d:
            raise MapFormatError(f"monomial line {ln!r} is not homogeneous of degree {d}")
        terms.append((comp, tuple(exps), coef))
    return k, d, terms


def parse_map(text, header="pmap"):
    """Parse a map definition; inhomogeneous terms raise :class:`MapFormatError`."""
    k, d, terms = parse_map_terms(text, header)
    if k < 1 or d < 1:
        raise MapFormatError(f"need k >= 1 and d >= 1, got k={k}, d={d}")
    return ProjectiveMap(k, d, terms)


def read_map(path):
    with open(path, encoding="utf-8") as fh:
        return parse_map(fh.read())


def write_map(f, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f.to_text())


# -- built-in maps -------------------------------------------------------------

def power_map(k=2, d=2):
    """``[z_0^d : ... : z_k^d]``."""
    terms = []
    for i in range(k + 1):
        e = [0] * (k + 1)
        e[i] = d
        terms.append((i, e, 1.0))
    return ProjectiveMap(k, d, terms)


def perturbed_power_map(eps=0.05):
    """``[z0^2 + eps z1 z2 : z1^2 + eps z0 z2 : z2^2]`` on P^2."""
    return ProjectiveMap(2, 2, [
        (0, (2, 0, 0), 1.0), (0, (0, 1, 1), eps),
        (1, (0, 2, 0), 1.0), (1, (1, 0, 1), eps),
        (2, (0, 0, 2), 1.0),
    ])


def n_monomials(k, d):
    return comb(d + k, k)


# -- derivatives along orbits ------------------------------------------------

def push_tangents(f, X, V, n):
    """Push points and tangent vectors forward ``n`` steps.

    Returns ``(Y, W, log_stretch2)``: sup-normalized images, FS-unit pushed
    tangents (phase kept) and the accumulated log of the squared FS stretch
    ``|D f^n v|^2 / |v|^2``.  Working in log-space keeps the ``d^n`` growth
    and superattracting decay representable.
    """
    X = sup_normalize(np.atleast_2d(np.asarray(X, dtype=np.complex128)))
    V = np.atleast_2d(np.asarray(V, dtype=np.complex128))
    log_s2 = np.zeros(X.shape[0])
    base = fs_norm2(X, V)
    V = V / np.sqrt(base)[:, None]
    for _ in range(int(n)):
        Y = f.lift(X)
        W = np.einsum("nij,nj->ni", f.jacobian(X), V)
        c = np.max(np.abs(Y), axis=1)
        Y = Y / c[:, None]
        W = orthogonal_part(Y, W / c[:, None])
        # rescale before squaring so tiny or huge tangents stay representable
        m = np.max(np.abs(W), axis=1)
        live = m > 0
        W[live] /= m[live, None]
        s2 = fs_norm2(Y, W)
        live &= s2 > 0
        with np.errstate(divide="ignore"):
            log_s2 = log_s2 + np.where(live, np.log(np.where(live, s2, 1.0)) + 2 * np.log(np.where(live, m, 1.0)), -np.inf)
        W[live] /= np.sqrt(s2[live])[:, None]
        W[~live] = 0.0
        X, V = Y, W
    return X, V, log_s2


def tangent_pushforward(f, x, v, n):
    """``(D f^n(x) v, stretch)`` with the stretch measured in the FS metric.

    The returned vector lives at the sup-normalized lift of ``f^n(x)`` and has
    FS length ``stretch * |v|_FS``.
    """
    x = np.asarray(x, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    if int(n) == 0:
        return v.copy(), 1.0
    Y, W, log_s2 = push_tangents(f, x[None], v[None], n)
    stretch = float(np.exp(0.5 * log_s2[0]))
    return W[0] * stretch * np.sqrt(fs_norm2(x[None], v[None])[0]), stretch


def projective_jacobian(f, X):
    """Modulus of the complex Jacobian determinant of ``f`` in FS-orthonormal frames."""
    from .projective import tangent_frame

    X = sup_normalize(np.atleast_2d(np.asarray(X, dtype=np.complex128)))
    frames = tangent_frame(X)
    Y = f.lift(X)
    J = f.jacobian(X)
    W = np.einsum("nij,nbj->nbi", J, frames)
    frames_y = tangent_frame(Y)
    # coordinates of the images in the orthonormal frame at f(x)
    ny2 = np.sum(np.abs(Y) ** 2, axis=1)
    M = np.einsum("nai,nbi->nab", np.conj(frames_y), W) / ny2[:, None, None]
    return np.abs(np.linalg.det(M))


@dataclass
class JacobianData:
    matrix: np.ndarray
    projective_jacobian_modulus: float


def jacobian_data(f, x):
    x = sup_normalize(np.asarray(x, dtype=np.complex128)[None])
    return JacobianData(f.jacobian(x)[0], float(projective_jacobian(f, x)[0]))


# -- validation --------------------------------------------------------------

@dataclass
class ValidationReport:
    ok: bool
    min_ratio: float
    witness: np.ndarray = None
    resultant_abs: float = None
    trials: int = 0
    notes: list = field(default_factory=list)


def validate(f, trials=20000, seed=0, exact=True, raise_on_failure=True):
    """Check that ``f`` has no common zero besides the origin.

    Monte-Carlo minimum of ``|F(z)|_inf / |z|_inf^d`` over the unit sup-norm
    sphere, refined by local minimization, plus (for ``k = 2``) an exact
    check: the points of ``{F_0 = F_1 = 0}`` are found by resultants and
    ``F_2`` must not vanish on any of them.
    """
    from scipy.optimize import minimize

    rng = check_random_state(seed)
    m = f.k + 1
    Z = rng.standard_normal((trials, m)) + 1j * rng.standard_normal((trials, m))
    Z = sup_normalize(Z)
    ratio = np.max(np.abs(f.lift(Z)), axis=1)
    order = np.argsort(ratio)[:5]

    def obj(v):
        z = v[:m] + 1j * v[m:]
        s = np.max(np.abs(z))
        if s == 0:
            return 1e9
        return float(np.linalg.norm(f.lift(z / s)))

    best, witness = np.inf, None
    for i in order:
        z0 = Z[i]
        res = minimize(obj, np.concatenate([z0.real, z0.imag]), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        z = res.x[:m] + 1j * res.x[m:]
        z = z / np.max(np.abs(z))
        r = float(np.max(np.abs(f.lift(z))))
        if r < best:
            best, witness = r, z
    report = ValidationReport(ok=True, min_ratio=best, witness=witness, trials=trials)
    if exact and f.k == 2:
        from .algebraic import common_zero_check

        ok, value, wit = common_zero_check(f)
        report.resultant_abs = value
        if not ok:
            report.ok = False
            if wit is not None:
                report.witness = wit
            report.notes.append("exact check found a common zero")
    if best < 1e-8:
        report.ok = False
        report.notes.append("Monte-Carlo search found a near-common zero")
    if not report.ok and raise_on_failure:
        raise DegenerateMap(f"map has a common zero near {report.witness}", witness=report.witness)
    return report


def preimages(f, a, n, allow_critical=False):
    """Points of ``f^{-n}(a)`` and their multiplicities (see :mod:`pluridyn.homotopy`)."""
    from .homotopy import preimages as _pre

    return _pre(f, a, n, allow_critical=allow_critical)
