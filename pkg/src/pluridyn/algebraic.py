"""Arbitrary-precision plane-curve algebra on P^2.

Homogeneous polynomials in ``z0, z1, z2`` with mpmath complex coefficients,
resultant-based implicitization of images of lines, pullbacks by
composition, and intersection of two curves by elimination.
"""
from dataclasses import dataclass
from itertools import product

import mpmath
import numpy as np

from .exceptions import CommonComponent, MapFormatError, PrecisionExhausted, ResultantOverflow

PREC_BITS = 256
MAX_SYLVESTER = 96
CLUSTER_TOL = 1e-6


def _monomials(D):
    return [(D - b - c, b, c) for b in range(D + 1) for c in range(D + 1 - b)]


class HomPoly2:
    """Homogeneous polynomial of degree ``D`` in three variables."""

    def __init__(self, D, coeffs):
        self.D = int(D)
        self.coeffs = {}
        for e, c in coeffs.items():
            e = tuple(int(v) for v in e)
            if len(e) != 3 or sum(e) != self.D or min(e) < 0:
                raise ValueError(f"monomial {e} is not of degree {self.D} in 3 variables")
            c = mpmath.mpc(c)
            if c != 0:
                self.coeffs[e] = self.coeffs.get(e, mpmath.mpc(0)) + c

    # -- construction --------------------------------------------------------

    @classmethod
    def linear(cls, v):
        return cls(1, {(1, 0, 0): v[0], (0, 1, 0): v[1], (0, 0, 1): v[2]})

    @classmethod
    def from_map(cls, f):
        """The three components of a map of ``P^2`` as polynomials."""
        if f.k != 2:
            raise ValueError("plane-curve algebra needs k = 2")
        out = []
        for comp in f.component_dicts():
            out.append(cls(f.d, {e: mpmath.mpc(complex(c)) for e, c in comp.items()}))
        return out

    @classmethod
    def one(cls):
        return cls(0, {(0, 0, 0): 1})

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if other.D != self.D:
            raise ValueError("degrees differ")
        c = dict(self.coeffs)
        for e, v in other.coeffs.items():
            c[e] = c.get(e, 0) + v
        return HomPoly2(self.D, c)

    def scale(self, s):
        s = mpmath.mpc(s)
        return HomPoly2(self.D, {e: v * s for e, v in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, HomPoly2):
            return self.scale(other)
        c = {}
        for (e1, v1), (e2, v2) in product(self.coeffs.items(), other.coeffs.items()):
            e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
            c[e] = c.get(e, 0) + v1 * v2
        return HomPoly2(self.D + other.D, c)

    def __pow__(self, m):
        out = HomPoly2.one()
        base = self
        m = int(m)
        while m:
            if m & 1:
                out = out * base
            base = base * base
            m >>= 1
        return out

    def compose(self, G):
        """``self(G0, G1, G2)`` for homogeneous ``G_i`` of a common degree."""
        e = G[0].D
        powers = [[HomPoly2.one()] for _ in range(3)]
        for i in range(3):
            for _ in range(self.D):
                powers[i].append(powers[i][-1] * G[i])
        acc = {}
        for (a, b, c), v in sorted(self.coeffs.items()):
            term = powers[0][a] * powers[1][b] * powers[2][c]
            for m, w in term.coeffs.items():
                acc[m] = acc.get(m, 0) + v * w
        return HomPoly2(self.D * e, acc)

    def linear_change(self, U):
        """``x -> self(U x)`` for a 3x3 matrix ``U``."""
        rows = [HomPoly2.linear([mpmath.mpc(complex(U[i][j])) for j in range(3)]) for i in range(3)]
        return self.compose(rows)

    # -- evaluation ----------------------------------------------------------

    def eval_mp(self, z):
        z = [mpmath.mpc(v) for v in z]
        return mpmath.fsum(v * z[0] ** a * z[1] ** b * z[2] ** c
                           for (a, b, c), v in self.coeffs.items())

    def evaluate(self, X):
        """Double-precision values at the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.complex128))
        if not self.coeffs:
            return np.zeros(X.shape[0], dtype=np.complex128)
        E = np.array(list(self.coeffs.keys()))
        C = np.array([complex(v) for v in self.coeffs.values()])
        P = np.ones((self.D + 1, X.shape[0], 3), dtype=np.complex128)
        for p in range(1, self.D + 1):
            P[p] = P[p - 1] * X
        mon = P[E[:, 0], :, 0] * P[E[:, 1], :, 1] * P[E[:, 2], :, 2]
        return C @ mon

    def in_last_variable(self, z0, z1):
        """Coefficients (highest power first) of ``z2 -> self(z0, z1, z2)``."""
        out = [mpmath.mpc(0)] * (self.D + 1)
        for (a, b, c), v in self.coeffs.items():
            out[self.D - c] += v * z0 ** a * z1 ** b
        return out

    def coefficient_norm(self):
        return max((abs(v) for v in self.coeffs.values()), default=mpmath.mpf(0))

    def normalized(self):
        n = self.coefficient_norm()
        return self if n == 0 else self.scale(1 / n)

    def is_zero(self, rel=mpmath.mpf(10) ** -60):
        return self.coefficient_norm() <= rel

    # -- io ------------------------------------------------------------------

    def to_text(self):
        lines = [f"poly k=2 d={self.D}"]
        for e in sorted(self.coeffs):
            v = complex(self.coeffs[e])
            lines.append(f"0 {e[0]} {e[1]} {e[2]} {v.real!r} {v.imag!r}")
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return f"HomPoly2(D={self.D}, terms={len(self.coeffs)})"


def parse_poly(text):
    """Read a polynomial file (map-file line format, ``poly`` header, component 0)."""
    from .endomorphism import parse_map_terms

    k, D, terms = parse_map_terms(text, header="poly")
    if k != 2:
        raise MapFormatError(f"plane curves need k=2, got k={k}")
    coeffs = {}
    for comp, e, c in terms:
        if comp != 0:
            raise MapFormatError(f"polynomial files use component index 0, got {comp}")
        coeffs[e] = coeffs.get(e, 0) + mpmath.mpc(c)
    return HomPoly2(D, coeffs)


# -- elimination -------------------------------------------------------------

def sylvester_det(A, B):
    """Resultant of two univariate polynomials (coefficient lists, highest first).

    The formal degrees ``len(A)-1`` and ``len(B)-1`` are used even when leading
    coefficients vanish, which gives the homogeneous resultant.
    """
    m, n = len(A) - 1, len(B) - 1
    N = m + n
    if N == 0:
        return mpmath.mpc(1)
    if N > MAX_SYLVESTER:
        raise ResultantOverflow(f"Sylvester matrix of size {N} exceeds the budget {MAX_SYLVESTER}")
    M = mpmath.matrix(N, N)
    for i in range(n):
        for j, a in enumerate(A):
            M[i, i + j] = a
    for i in range(m):
        for j, b in enumerate(B):
            M[n + i, i + j] = b
    return mpmath.det(M)


def _roots(coeffs):
    """Roots of a univariate polynomial given highest power first."""
    c = list(coeffs)
    scale = max(abs(v) for v in c)
    while c and abs(c[0]) <= scale * mpmath.mpf(2) ** (-mpmath.mp.prec // 2):
        c.pop(0)
    if len(c) <= 1:
        return [], len(coeffs) - 1
    deficit = len(coeffs) - len(c)
    try:
        r = mpmath.polyroots(c, maxsteps=400, extraprec=2 * mpmath.mp.prec)
    except mpmath.libmp.NoConvergence as exc:
        raise PrecisionExhausted(f"root isolation did not converge for degree {len(c) - 1}") from exc
    return list(r), deficit


def _parametrized_image(f, a, b, n):
    """Coefficient lists in ``s`` (lowest first) of ``F^n(a + s b)``."""
    comps = HomPoly2.from_map(f)
    X = [[mpmath.mpc(complex(a[i])), mpmath.mpc(complex(b[i]))] for i in range(3)]
    for _ in range(int(n)):
        Y = []
        for P in comps:
            acc = [mpmath.mpc(0)] * (P.D * (len(X[0]) - 1) + 1)
            for (e0, e1, e2), v in P.coeffs.items():
                t = [v]
                for coef, e in zip(X, (e0, e1, e2)):
                    for _ in range(e):
                        t = _umul(t, coef)
                for i, w in enumerate(t):
                    acc[i] += w
            Y.append(acc)
        s = max(abs(w) for comp in Y for w in comp)
        X = [[w / s for w in comp] for comp in Y]
    return X


def _umul(p, q):
    out = [mpmath.mpc(0)] * (len(p) + len(q) - 1)
    for i, u in enumerate(p):
        for j, v in enumerate(q):
            out[i + j] += u * v
    return out


def _uval(p, s):
    """Evaluate lowest-first coefficients at ``s``."""
    acc = mpmath.mpc(0)
    for c in reversed(p):
        acc = acc * s + c
    return acc


def _image_multiplicity(X, s0):
    """Number of parameters ``s`` with ``X(s)`` equal to ``X(s0)`` projectively."""
    z = [_uval(c, s0) for c in X]
    i = max(range(3), key=lambda j: abs(z[j]))
    others = [j for j in range(3) if j != i]
    # z_i X_j(s) - z_j X_i(s) = 0 for both j != i
    A = [z[i] * u - z[others[0]] * v for u, v in zip(X[others[0]], X[i])]
    B = [z[i] * u - z[others[1]] * v for u, v in zip(X[others[1]], X[i])]
    roots, deficit = _roots(list(reversed(A)))
    normB = max(abs(v) for v in B)
    if normB == 0:
        return len(roots) + deficit
    count = 0
    for r in roots:
        val = abs(_uval(B, r)) / (normB * max(1, abs(r)) ** (len(B) - 1))
        if val < mpmath.mpf(10) ** -20:
            count += 1
    if deficit:
        # the point s = infinity is a solution when it maps to z too
        lead = [c[-1] for c in X]
        if abs(z[i] * lead[others[1]] - z[others[1]] * lead[i]) <= mpmath.mpf(10) ** -20 * normB:
            count += deficit
    return count


def _nullspace_fit(X, e, rng):
    """Degree-``e`` polynomial vanishing on the parametrized curve ``X``."""
    mons = _monomials(e)
    N = len(mons) + 12
    s = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    pts = np.array([[complex(_uval(c, mpmath.mpc(si))) for c in X] for si in s])
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    E = np.array(mons)
    M = np.prod(pts[:, None, :] ** E[None, :, :], axis=2)
    _, sv, vh = np.linalg.svd(M)
    if sv[-1] > 1e-8 * sv[0]:
        raise PrecisionExhausted("no polynomial of the expected degree vanishes on the image")
    v = np.conj(vh[-1])
    return HomPoly2(e, {m: complex(c) for m, c in zip(mons, v) if abs(c) > 1e-15})


@dataclass
class ImageCurve:
    """Reduced defining polynomial of ``f^n(L')`` and the covering multiplicity."""

    poly: HomPoly2
    multiplicity: int

    @property
    def degree(self):
        return self.poly.D


def implicitize_image(line, f, n, prec=PREC_BITS, seed=0):
    """Defining polynomial of the image of a projective line under ``f^n``.

    ``line`` is a ``LinearSubspace`` of dimension 1 or a pair of spanning
    vectors.  The parametrization ``s -> F^n(a + s b)`` is eliminated with
    ``Res_s(z1 X0 - z0 X1, z2 X0 - z0 X2)``, which equals ``z0^D P^m`` with
    ``D = d^n`` and ``m`` the number of parameters over a generic image point.
    """
    from .projective import LinearSubspace

    B = line.orthonormal_basis if isinstance(line, LinearSubspace) else np.asarray(line)
    if B.shape[0] != 2:
        raise ValueError("need a projective line")
    a, b = B[0], B[1]
    D = f.d ** int(n)
    if 2 * D > MAX_SYLVESTER:
        raise ResultantOverflow(f"image degree {D} is beyond the resultant budget")
    rng = np.random.default_rng(seed)
    with mpmath.workprec(prec):
        X = _parametrized_image(f, a, b, n)
        s0 = mpmath.mpc(*rng.standard_normal(2))
        mult = _image_multiplicity(X, s0)
        if mult < 1 or D % mult:
            raise PrecisionExhausted(f"inconsistent covering multiplicity {mult} for degree {D}")
        e = D // mult
        if mult > 1:
            return ImageCurve(_nullspace_fit(X, e, rng), mult)
        rev = [list(reversed(c)) for c in X]

        def res(z1, z2):
            A = [z1 * u - v for u, v in zip(rev[0], rev[1])]
            Bq = [z2 * u - v for u, v in zip(rev[0], rev[2])]
            return sylvester_det(A, Bq)

        # bivariate interpolation of the dehomogenized resultant on roots of unity
        Nn = D + 1
        w = [mpmath.expjpi(mpmath.mpf(2 * i) / Nn) for i in range(Nn)]
        vals = [[res(w[i], w[j]) for j in range(Nn)] for i in range(Nn)]
        coeffs = {}
        scale = max(abs(v) for row in vals for v in row)
        if scale == 0:
            raise PrecisionExhausted("resultant vanished identically")
        for p in range(Nn):
            for q in range(Nn - p):
                acc = mpmath.fsum(vals[i][j] * w[(-p * i - q * j) % Nn]
                                  for i in range(Nn) for j in range(Nn))
                coeffs[(D - p - q, p, q)] = acc / (Nn * Nn) / scale
        P = HomPoly2(D, coeffs).normalized()
        # interpolation check at an off-grid point
        z1, z2 = mpmath.mpc(*rng.standard_normal(2)), mpmath.mpc(*rng.standard_normal(2))
        direct = res(z1, z2) / scale
        interp = P.eval_mp([1, z1, z2]) * HomPoly2(D, coeffs).coefficient_norm()
        if abs(direct - interp) > mpmath.mpf(2) ** (-prec // 3) * max(1, abs(direct)):
            raise PrecisionExhausted("interpolated resultant does not reproduce direct values")
        return ImageCurve(P, 1)


def pullback_curve(f, H):
    """``H o F``: the defining polynomial of ``f^*[H = 0]``."""
    with mpmath.workprec(PREC_BITS):
        return H.compose(HomPoly2.from_map(f))


def pullback_line_by_iterate(f, h, m):
    """Defining polynomial of ``(f^m)^{-1}`` of the line ``{h . z = 0}``."""
    with mpmath.workprec(PREC_BITS):
        comps = [HomPoly2.linear([1 if i == j else 0 for j in range(3)]) for i in range(3)]
        Fc = HomPoly2.from_map(f)
        for _ in range(int(m)):
            comps = [c.compose(Fc) for c in comps]
            # one common factor keeps the components of F^m consistent
            scale = max(c.coefficient_norm() for c in comps)
            comps = [c.scale(1 / scale) for c in comps]
        acc = comps[0].scale(complex(h[0]))
        for i in (1, 2):
            acc = acc + comps[i].scale(complex(h[i]))
        return acc


def _random_unitary(rng):
    Z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    q, r = np.linalg.qr(Z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def intersect_curves(P, Q, prec=PREC_BITS, seed=0, cluster_tol=CLUSTER_TOL):
    """Intersection points of ``{P = 0}`` and ``{Q = 0}`` with multiplicities.

    Returns ``(points, multiplicities)`` with multiplicities summing to
    ``deg P * deg Q``.  A random unitary change of coordinates puts the curves
    in general position; the resultant in ``z2`` is interpolated on roots of
    unity, its roots isolated, and each root lifted back to a common zero.
    """
    from .homotopy import _lex_order
    from .projective import fs_distance, normalize

    p, q = P.D, Q.D
    if p == 0 or q == 0:
        raise ValueError("constant polynomial")
    rng = np.random.default_rng(seed)
    U = _random_unitary(rng)
    with mpmath.workprec(prec):
        Pu, Qu = P.normalized().linear_change(U), Q.normalized().linear_change(U)
        N = p * q + 1
        w = [mpmath.expjpi(mpmath.mpf(2 * i) / N) for i in range(N)]
        vals = [sylvester_det(Pu.in_last_variable(1, wi), Qu.in_last_variable(1, wi)) for wi in w]
        coef = [mpmath.fsum(vals[i] * w[(-j * i) % N] for i in range(N)) / N for j in range(N)]
        norm = max(abs(c) for c in coef)
        if norm <= mpmath.mpf(2) ** (-prec // 2):
            raise CommonComponent("resultant vanishes identically: the curves share a component")
        coef = [c / norm for c in coef]
        roots, deficit = _roots(list(reversed(coef)))
        pts, res = [], []
        for r in roots:
            zr = Pu.in_last_variable(1, r)
            cand, _ = _roots(zr)
            if not cand:
                raise PrecisionExhausted("could not lift a resultant root")
            qv = [abs(Qu.eval_mp([1, r, c])) / max(1, abs(c)) ** q for c in cand]
            c = cand[int(np.argmin([float(v) for v in qv]))]
            pts.append([complex(1), complex(r), complex(c)])
            res.append(float(min(qv)))
        if deficit:
            raise PrecisionExhausted("intersection on the chart boundary; retry with another seed")
    X = np.array(pts, dtype=np.complex128) @ U.T
    X = normalize(X)
    # cluster coincident roots into multiplicities
    label = -np.ones(len(X), dtype=int)
    reps, mult = [], []
    for i in range(len(X)):
        if label[i] >= 0:
            continue
        near = (fs_distance(X[i], X) <= cluster_tol) & (label < 0)
        label[near] = len(reps)
        reps.append(X[i])
        mult.append(int(near.sum()))
    reps = np.array(reps)
    mult = np.array(mult)
    o = _lex_order(reps)
    return reps[o], mult[o]


def common_zero_check(f, tol=1e-10):
    """Exact-backend test that the components of a map of ``P^2`` share no zero.

    Returns ``(ok, min_value, witness)`` where ``min_value`` is the smallest
    ``|F2| / |x|^d`` over the points of ``{F0 = F1 = 0}``.
    """
    F = HomPoly2.from_map(f)
    try:
        pts, _ = intersect_curves(F[0], F[1])
    except CommonComponent:
        return False, 0.0, None
    vals = np.abs(F[2].evaluate(pts)) / np.linalg.norm(pts, axis=1) ** f.d
    vals = vals / max(1.0, float(F[2].coefficient_norm()))
    i = int(np.argmin(vals))
    return bool(vals[i] > tol), float(vals[i]), pts[i]
