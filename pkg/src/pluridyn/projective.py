"""Homogeneous-coordinate geometry of P^k.

Points are stored as complex arrays of shape ``(k+1,)`` or ``(N, k+1)``.  All
functions are vectorized over the leading axis.
"""
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_points
from .exceptions import PointInCenter, ZeroVector

EPS_PROJ = 1e-10


def normalize(x):
    """Scale homogeneous coordinates so the largest one is exactly 1.

    Dividing by the dominant coordinate (first index on ties) gives sup-norm 1
    and a canonical representative, so equal projective points normalize to
    identical arrays.
    """
    x = np.asarray(x, dtype=np.complex128)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    mod = np.abs(X)
    idx = np.argmax(mod, axis=1)
    rows = np.arange(X.shape[0])
    pivot = X[rows, idx]
    if np.any(mod[rows, idx] == 0):
        raise ZeroVector("homogeneous coordinates are all zero")
    out = X / pivot[:, None]
    out[rows, idx] = 1.0
    return out[0] if single else out


def sup_normalize(X):
    """Divide by the sup norm (a positive real), keeping the phase."""
    X = np.asarray(X, dtype=np.complex128)
    s = np.max(np.abs(X), axis=-1, keepdims=True)
    if np.any(s == 0):
        raise ZeroVector("homogeneous coordinates are all zero")
    return X / s


def fs_distance(x, y):
    """Fubini-Study distance in [0, pi/2], the angle between complex lines."""
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    inner = np.sum(np.conj(x) * y, axis=-1)
    nx2 = np.sum(np.abs(x) ** 2, axis=-1)
    # component of y orthogonal to x, computed directly for small-angle accuracy
    r = y - (inner / nx2)[..., None] * x
    return np.arctan2(np.linalg.norm(r, axis=-1) * np.sqrt(nx2), np.abs(inner))


def projective_equal(x, y, eps=EPS_PROJ):
    return fs_distance(x, y) <= eps


def random_points(k, size, rng):
    """FS-uniform random points of P^k (normalized complex Gaussians)."""
    Z = rng.standard_normal((size, k + 1)) + 1j * rng.standard_normal((size, k + 1))
    return normalize(Z)


def orthogonal_part(x, v):
    """Component of ``v`` orthogonal to the lift ``x`` (row-wise)."""
    inner = np.sum(np.conj(x) * v, axis=-1) / np.sum(np.abs(x) ** 2, axis=-1)
    return v - inner[..., None] * x


def fs_norm2(x, v):
    """Squared Fubini-Study length of the tangent vector ``v`` at the lift ``x``.

    Unnormalized metric ``|v_perp|^2 / |x|^2``; a line has area pi in it.  Only
    ratios of this quantity are used for reweighting, so the constant cancels.
    """
    vp = orthogonal_part(x, v)
    return np.sum(np.abs(vp) ** 2, axis=-1) / np.sum(np.abs(x) ** 2, axis=-1)


def unit_tangent(x, v):
    """Orthogonal part of ``v`` scaled to FS length 1 (phase kept)."""
    vp = orthogonal_part(x, v)
    n = np.sqrt(np.sum(np.abs(vp) ** 2, axis=-1) / np.sum(np.abs(x) ** 2, axis=-1))
    return vp / n[..., None]


def tangent_frame(x):
    """Orthonormal FS frame of the tangent space at each point of ``x``.

    Returns an array of shape ``(N, k, k+1)`` of lifted vectors orthogonal to
    ``x`` with FS length 1.
    """
    X = np.atleast_2d(np.asarray(x, dtype=np.complex128))
    N, m = X.shape
    norms = np.linalg.norm(X, axis=1)
    xhat = X / norms[:, None]
    M = np.concatenate([xhat[:, :, None], np.broadcast_to(np.eye(m), (N, m, m))], axis=2)
    q, _ = np.linalg.qr(M)
    frames = np.swapaxes(q[:, :, 1:m], 1, 2) * norms[:, None, None]
    return frames


@dataclass(frozen=True)
class FubiniStudyForm:
    """The Fubini-Study Kahler form normalized so that a line has area 1."""

    k: int = 2
    # ratio between the normalized form and the raw metric |v_perp|^2/|x|^2
    scale: float = 1.0 / np.pi

    def area_density(self, x, v):
        """Area element of the complex line spanned by ``v`` at ``x``."""
        return self.scale * fs_norm2(x, v)

    def total_volume(self):
        """Integral of omega^k, equal to 1."""
        return 1.0


@dataclass
class HomogeneousPoint:
    """A point of P^k.  Equality is projective, up to ``eps``."""

    coords: np.ndarray
    eps: float = EPS_PROJ

    def __post_init__(self):
        self.coords = check_points(self.coords, ensure_2d=False).reshape(-1)
        if not np.any(self.coords):
            raise ZeroVector("homogeneous coordinates are all zero")

    @property
    def k(self):
        return self.coords.size - 1

    def normalize(self):
        return HomogeneousPoint(normalize(self.coords), self.eps)

    def __eq__(self, other):
        if not isinstance(other, HomogeneousPoint):
            return NotImplemented
        return bool(fs_distance(self.coords, other.coords) <= self.eps)

    def __repr__(self):
        c = ":".join(f"{z:.6g}" for z in normalize(self.coords))
        return f"[{c}]"


@dataclass
class LinearSubspace:
    """Projective subspace given by a spanning set of lifted vectors."""

    basis: np.ndarray
    kernel_forms: np.ndarray = field(init=False)
    orthonormal_basis: np.ndarray = field(init=False)

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.basis, dtype=np.complex128))
        u, s, vh = np.linalg.svd(B, full_matrices=True)
        rank = int(np.sum(s > 1e-12 * s[0]))
        if rank == 0:
            raise ZeroVector("subspace spanned by zero vectors")
        self.basis = B
        self.orthonormal_basis = vh[:rank]
        # covectors annihilating the span: conjugates of the complement
        self.kernel_forms = np.conj(vh[rank:])

    @classmethod
    def from_kernel(cls, forms):
        forms = np.atleast_2d(np.asarray(forms, dtype=np.complex128))
        _, s, vh = np.linalg.svd(forms, full_matrices=True)
        rank = int(np.sum(s > 1e-12 * s[0]))
        # null space of forms acting as x -> forms @ x
        return cls(np.conj(vh[rank:]))

    @property
    def dimension(self):
        return self.orthonormal_basis.shape[0] - 1

    @property
    def ambient_dim(self):
        return self.orthonormal_basis.shape[1] - 1

    def contains(self, x, eps=EPS_PROJ):
        X = np.atleast_2d(x)
        if self.kernel_forms.shape[0] == 0:
            return np.ones(X.shape[0], dtype=bool)
        vals = np.abs(X @ self.kernel_forms.T).max(axis=1)
        return vals <= eps * np.linalg.norm(X, axis=1)

    def parametrize(self, s):
        """Point ``basis[0] + s*basis[1]`` of a line (affine parameter)."""
        e = self.orthonormal_basis
        return e[0] + np.multiply.outer(np.asarray(s), e[1])


class CenterProjection:
    """Linear projection of center ``I`` onto the complementary subspace ``L``.

    The lift ``C^{k+1}`` splits as ``I~ + L~``; ``P_L`` and ``P_I`` are the two
    (oblique) projections.  ``pi(x) = [P_L x]`` and the fiber scaling
    ``A_theta`` multiplies the ``I~`` component by ``theta``.
    """

    def __init__(self, center, target):
        self.center = center if isinstance(center, LinearSubspace) else LinearSubspace(center)
        self.target = target if isinstance(target, LinearSubspace) else LinearSubspace(target)
        Bi = self.center.orthonormal_basis
        Bl = self.target.orthonormal_basis
        B = np.vstack([Bi, Bl]).T
        if B.shape[0] != B.shape[1] or np.linalg.matrix_rank(B) < B.shape[0]:
            raise ValueError("center and target must be complementary (I and L disjoint)")
        Binv = np.linalg.inv(B)
        p = Bi.shape[0]
        self.P_I = B[:, :p] @ Binv[:p, :]
        self.P_L = B[:, p:] @ Binv[p:, :]

    @property
    def k(self):
        return self.P_L.shape[0] - 1

    def fiber_matrix(self, theta):
        """Matrix of ``A_theta`` in the fixed lift."""
        return self.P_L + theta * self.P_I

    def _check(self, X):
        PL = X @ self.P_L.T
        bad = np.linalg.norm(PL, axis=1) <= EPS_PROJ * np.linalg.norm(X, axis=1)
        if np.any(bad):
            raise PointInCenter("point lies on the center of projection",
                                witness=X[np.argmax(bad)])
        return PL

    def project(self, x):
        X = check_points(x)
        out = normalize(self._check(X))
        return out[0] if np.ndim(x) == 1 else out

    def fiber_scale(self, theta, x):
        X = check_points(x)
        self._check(X)
        out = normalize(X @ self.fiber_matrix(theta).T)
        return out[0] if np.ndim(x) == 1 else out

    def fiber_coordinate(self, x):
        """Coordinate of ``x`` in the fiber vector space ``I(x) \\ I``.

        For ``p = 1`` this is the complex number ``s`` with
        ``x ~ pi~(x) + s * c`` where the lift of ``pi(x)`` has unit norm and
        ``c`` is the unit lift of the center.
        """
        X = check_points(x)
        PL = self._check(X)
        PI = X @ self.P_I.T
        c = self.center.orthonormal_basis
        nl = np.linalg.norm(PL, axis=1)
        coeff = (PI @ np.conj(c).T) / nl[:, None]
        return coeff[:, 0] if coeff.shape[1] == 1 else coeff


def coordinate_projection(k=2, center_index=None):
    """Projection from the coordinate point ``e_c`` onto ``{z_c = 0}``."""
    c = k if center_index is None else center_index
    I = np.eye(k + 1)[[c]]
    L = np.eye(k + 1)[[i for i in range(k + 1) if i != c]]
    return CenterProjection(I, L)
