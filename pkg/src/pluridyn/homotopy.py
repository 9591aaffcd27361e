"""Batched homotopy continuation for ``F(z) = w``.

Each solve of ``f(z) = w`` is the affine system ``F(z) = w`` in ``C^{k+1}``.
It has ``d^{k+1}`` solutions, falling into ``d^k`` projective classes, and the
classes are permuted by ``z -> zeta z`` with ``zeta^d = 1``.  The homotopy

    H(z, t) = (1 - t) * gamma * (z^d - 1) + t * (F(z) - w)

is equivariant under that action, so only one start point per class is
tracked.  All paths of all targets advance together with per-path step
sizes.
"""
import itertools

import numpy as np

from .exceptions import SolverFailure

GAMMA = np.exp(2j * np.pi * 0.3183098861837907) * 0.9781


def start_points(k, d):
    """Representatives of the start solutions modulo the diagonal roots of unity."""
    roots = np.exp(2j * np.pi * np.arange(d) / d)
    reps = [np.concatenate([[1.0], roots[list(a)]]) for a in itertools.product(range(d), repeat=k)]
    return np.array(reps, dtype=np.complex128)


def _residual(f, Z, W, t, gamma):
    d = f.d
    G = Z ** d - 1.0
    return (1 - t)[:, None] * gamma * G + t[:, None] * (f.lift(Z) - W)


def _jac_z(f, Z, t, gamma):
    d = f.d
    Dg = d * Z ** (d - 1)
    J = t[:, None, None] * f.jacobian(Z)
    idx = np.arange(Z.shape[1])
    J[:, idx, idx] += ((1 - t) * gamma)[:, None] * Dg
    return J


def _dz_dt(f, Z, W, t, gamma):
    Ht = -gamma * (Z ** f.d - 1.0) + f.lift(Z) - W
    J = _jac_z(f, Z, t, gamma)
    return -np.linalg.solve(J, Ht[..., None])[..., 0]


def track(f, W, gamma=GAMMA, max_steps=10000, tol=1e-9, h0=0.02, h_max=0.1):
    """Track all start paths for every target row of ``W`` to ``t = 1``.

    Returns an array ``(len(W), d^k, k+1)`` of affine solutions of
    ``F(z) = w`` (one lift per projective class) after Newton polishing.
    """
    W = np.atleast_2d(np.asarray(W, dtype=np.complex128))
    S = start_points(f.k, f.d)
    nt, ns, m = W.shape[0], S.shape[0], f.k + 1
    Z = np.tile(S, (nt, 1))
    Wr = np.repeat(W, ns, axis=0)
    P = Z.shape[0]
    t = np.zeros(P)
    h = np.full(P, h0)
    steps = np.zeros(P, dtype=int)
    active = np.ones(P, dtype=bool)
    g = gamma
    with np.errstate(all="ignore"):
        while np.any(active):
            a = np.flatnonzero(active)
            za, wa, ta = Z[a], Wr[a], t[a]
            ha = np.minimum(h[a], 1.0 - ta)
            # RK4 predictor
            k1 = _dz_dt(f, za, wa, ta, g)
            k2 = _dz_dt(f, za + 0.5 * ha[:, None] * k1, wa, ta + 0.5 * ha, g)
            k3 = _dz_dt(f, za + 0.5 * ha[:, None] * k2, wa, ta + 0.5 * ha, g)
            k4 = _dz_dt(f, za + ha[:, None] * k3, wa, ta + ha, g)
            zp = za + (ha[:, None] / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            tn = ta + ha
            # Newton corrector
            ok = np.all(np.isfinite(zp), axis=1)
            first = None
            for it in range(3):
                J = _jac_z(f, zp, tn, g)
                R = _residual(f, zp, wa, tn, g)
                bad = ~np.isfinite(J).all(axis=(1, 2)) | ~np.isfinite(R).all(axis=1)
                J[bad] = np.eye(m)
                R[bad] = 0
                dz = np.linalg.solve(J, R[..., None])[..., 0]
                zp = zp - dz
                nd = np.linalg.norm(dz, axis=1) / (1 + np.linalg.norm(zp, axis=1))
                if first is None:
                    first = nd
                ok &= ~bad
            ok &= np.isfinite(nd) & (nd < tol) & (first < 1e-3)
            Z[a[ok]] = zp[ok]
            t[a[ok]] = tn[ok]
            h[a[ok]] = np.minimum(h[a[ok]] * 1.6, h_max)
            h[a[~ok]] = h[a[~ok]] * 0.5
            steps[a] += 1
            done = t >= 1.0
            active = ~done
            stuck = active & ((h < 1e-13) | (steps > max_steps))
            if np.any(stuck):
                # endgame: paths that stall next to t = 1 head for singular roots
                near = stuck & (t > 1 - 1e-4)
                t[near] = 1.0
                active &= ~near
                if np.any(stuck & ~near):
                    i = np.flatnonzero(stuck & ~near)[0]
                    raise SolverFailure(f"path {i} stalled at t={t[i]:.6g}", witness=Wr[i])
            if np.any(np.linalg.norm(Z, axis=1) > 1e8):
                raise SolverFailure("path diverged", witness=Wr[np.argmax(np.linalg.norm(Z, axis=1))])
    Z = polish(f, Z, Wr)
    return Z.reshape(nt, ns, m)


def polish(f, Z, W, iters=60, tol=1e-13):
    """Newton iterations on ``F(z) = w``; slow convergence at multiple roots is tolerated."""
    Z = Z.copy()
    m = Z.shape[1]
    with np.errstate(all="ignore"):
        for _ in range(iters):
            R = f.lift(Z) - W
            J = f.jacobian(Z)
            sing = np.abs(np.linalg.det(J)) < 1e-300
            J[sing] = np.eye(m)
            dz = np.linalg.solve(J, R[..., None])[..., 0]
            dz[sing] = 0
            fine = np.isfinite(dz).all(axis=1)
            Z[fine] -= dz[fine]
            if np.max(np.linalg.norm(dz[fine], axis=1), initial=0.0) < tol:
                break
    return Z


def residuals(f, Z, W):
    """Relative residual ``|F(z) - w| / max(1, |w|)`` per solution."""
    R = f.lift(Z) - W
    return np.linalg.norm(R, axis=-1) / np.maximum(1.0, np.linalg.norm(W, axis=-1))


def _lex_order(P, decimals=8):
    """Indices sorting normalized points lexicographically on rounded coordinates."""
    R = np.round(P, decimals) + 0.0  # folds -0.0 into 0.0
    keys = []
    for j in reversed(range(P.shape[1])):
        keys += [R[:, j].imag, R[:, j].real]
    return np.lexsort(keys)


def cluster_roots(P, tol=1e-6):
    """Group rows of ``P`` (one fiber) that are within ``tol`` in FS distance.

    Returns ``(representatives, multiplicities)``.
    """
    from .projective import fs_distance

    n = P.shape[0]
    label = -np.ones(n, dtype=int)
    reps, mult = [], []
    for i in range(n):
        if label[i] >= 0:
            continue
        near = (fs_distance(P[i], P) <= tol) & (label < 0)
        label[near] = len(reps)
        reps.append(P[i])
        mult.append(int(near.sum()))
    return np.array(reps), np.array(mult, dtype=int)


def solve_fibers(f, W, allow_critical=False, cluster_tol=1e-6):
    """Projective solutions of ``f(z) = w`` for each row of ``W``.

    Returns a list (one entry per target) of ``(points, multiplicities)``.
    Points are normalized and sorted lexicographically.
    """
    from .exceptions import CriticalValue
    from .projective import normalize, sup_normalize

    W = sup_normalize(np.atleast_2d(np.asarray(W, dtype=np.complex128)))
    Z = track(f, W)
    out = []
    for i in range(W.shape[0]):
        P = normalize(Z[i])
        reps, mult = cluster_roots(P, cluster_tol)
        if np.any(mult > 1) and not allow_critical:
            raise CriticalValue(f"target is a critical value: {mult.max()} roots coalesce",
                                witness=W[i])
        o = _lex_order(reps)
        out.append((reps[o], mult[o]))
    return out


def preimages(f, a, n, allow_critical=False, batch=4096):
    """All points of ``f^{-n}(a)`` with multiplicities.

    The tree is expanded one level at a time; every level is a single batch
    of independent solves, and the final list is sorted lexicographically so
    the result does not depend on traversal order.  Multiplicities multiply
    along branches, so their sum is ``d^(k n)``.
    """
    from .projective import normalize

    pts = normalize(np.atleast_2d(np.asarray(a, dtype=np.complex128)))
    mult = np.ones(1, dtype=int)
    for _ in range(int(n)):
        new_p, new_m = [], []
        for s in range(0, pts.shape[0], batch):
            for (P, m), m0 in zip(solve_fibers(f, pts[s:s + batch], allow_critical),
                                  mult[s:s + batch]):
                new_p.append(P)
                new_m.append(m * m0)
        pts = np.concatenate(new_p)
        mult = np.concatenate(new_m)
    o = _lex_order(pts)
    return pts[o], mult[o]
