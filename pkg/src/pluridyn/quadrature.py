"""Adaptive product Gauss quadrature over a projective line.

A line ``P(span(a, b))`` is parametrized by the sphere coordinates
``(u, phi)`` in ``[-1, 1] x [0, 2 pi)``, ``u = cos(theta)``, through the lift
``cos(theta/2) a + sin(theta/2) e^{i phi} b``.  The normalized Fubini-Study
area is then ``du dphi / (4 pi)``.

Cells carry ``q x q`` Gauss-Legendre nodes.  A cell is refined by halving it
along whichever axis shows the larger discrepancy between the parent rule
and the sum over its two halves.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import RefinementBudgetExceeded
from .projective import fs_distance

FOUR_PI = 4.0 * np.pi


def line_lift(a, b, u, phi):
    """Unit lifts and FS-unit tangents at parameters ``(u, phi)``."""
    u = np.asarray(u, dtype=float)
    phi = np.asarray(phi, dtype=float)
    al = np.sqrt(np.clip((1 + u) / 2, 0, 1))
    be = np.sqrt(np.clip((1 - u) / 2, 0, 1)) * np.exp(1j * phi)
    X = al[:, None] * a[None, :] + be[:, None] * b[None, :]
    T = -np.conj(be)[:, None] * a[None, :] + al[:, None] * b[None, :]
    return X, T


@dataclass
class RefinePolicy:
    """Tolerances for adaptive line quadrature.

    ``quad_tol`` bounds the relative error of every integrand component
    (cells are accepted once their estimated error is below ``quad_tol``
    times their own absolute integral).  ``max_gap``, when set, also forces
    refinement until neighbouring image nodes are closer than that FS
    distance.
    """

    quad_tol: float = 1e-4
    q: int = 8
    init_u: int = 4
    init_phi: int = 8
    max_nodes: int = 10_000_000
    max_levels: int = 40
    max_gap: float = None
    abs_floor: float = 1e-12


def _gauss(q):
    x, w = np.polynomial.legendre.leggauss(q)
    return x, w


def _cell_nodes(cells, q):
    """Nodes ``(C*q*q, 2)`` and weights for cells ``(C, 4) = [u0, u1, p0, p1]``."""
    x, w = _gauss(q)
    hu = (cells[:, 1] - cells[:, 0]) / 2
    hp = (cells[:, 3] - cells[:, 2]) / 2
    mu = (cells[:, 1] + cells[:, 0]) / 2
    mp = (cells[:, 3] + cells[:, 2]) / 2
    U = mu[:, None, None] + hu[:, None, None] * x[None, :, None]
    P = mp[:, None, None] + hp[:, None, None] * x[None, None, :]
    W = (hu * hp)[:, None, None] * w[None, :, None] * w[None, None, :] / FOUR_PI
    U, P = np.broadcast_arrays(U, P)
    return U.reshape(-1), P.reshape(-1), W.reshape(-1)


def _halves(cells):
    """The four half cells ``[u-low, u-high, phi-low, phi-high]`` of each cell."""
    u0, u1, p0, p1 = cells.T
    um, pm = (u0 + u1) / 2, (p0 + p1) / 2
    h = np.stack([
        np.stack([u0, um, p0, p1], 1),
        np.stack([um, u1, p0, p1], 1),
        np.stack([u0, u1, p0, pm], 1),
        np.stack([u0, u1, pm, p1], 1),
    ], 1)
    return h.reshape(-1, 4)


EVAL_CHUNK = 1 << 16


class _Evaluated:
    """Node data of a batch of cells."""

    def __init__(self, cells, q, evaluate):
        self.cells = cells
        u, p, w = _cell_nodes(cells, q)
        self.nq = q * q
        self.u, self.phi, self.w = u, p, w
        # bounded batches keep integrand temporaries small
        parts = [evaluate(u[i:i + EVAL_CHUNK], p[i:i + EVAL_CHUNK]) for i in range(0, len(u), EVAL_CHUNK)]
        self.data = parts[0] if len(parts) == 1 else {k: np.concatenate([d[k] for d in parts]) for k in parts[0]}
        vals = self.data["values"]
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("integrand produced non-finite values")
        C = cells.shape[0]
        wv = (w[:, None] * vals).reshape(C, self.nq, -1)
        self.Q = wv.sum(axis=1)
        self.Qabs = np.abs(wv).sum(axis=1)


def _gap(ev, idx, q):
    """Largest FS distance between neighbouring image nodes inside each cell."""
    Y = ev.data.get("points")
    if Y is None:
        z = np.zeros(len(idx))
        return z, z
    Y = Y.reshape(ev.cells.shape[0], q, q, -1)[idx]
    du = fs_distance(Y[:, 1:, :, :], Y[:, :-1, :, :]).max(axis=(1, 2))
    dp = fs_distance(Y[:, :, 1:, :], Y[:, :, :-1, :]).max(axis=(1, 2))
    return du, dp


def adaptive_line_quadrature(evaluate, policy=None):
    """Adaptively integrate ``evaluate`` over the line parameter sphere.

    ``evaluate(u, phi)`` returns a dict with at least ``"values"`` (array
    ``(N, m)`` of integrand components w.r.t. normalized area); any other
    per-node arrays are carried along.  Returns ``(nodes, integral, info)``
    where ``nodes`` is a dict of per-node arrays of the accepted cells,
    including ``"w"`` (area weights), ``"u"`` and ``"phi"``.
    """
    pol = policy or RefinePolicy()
    q = pol.q
    ue = np.linspace(-1, 1, pol.init_u + 1)
    pe = np.linspace(0, 2 * np.pi, pol.init_phi + 1)
    cells = np.array([[ue[i], ue[i + 1], pe[j], pe[j + 1]]
                      for i in range(pol.init_u) for j in range(pol.init_phi)])
    parent = _Evaluated(cells, q, evaluate)
    Q_par, Qabs_par = parent.Q, parent.Qabs
    scale = np.maximum(Qabs_par.sum(axis=0), pol.abs_floor)
    accepted = []
    spent = cells.shape[0] * q * q
    for level in range(pol.max_levels):
        if cells.shape[0] == 0:
            break
        C = cells.shape[0]
        hv = _Evaluated(_halves(cells), q, evaluate)
        spent += hv.cells.shape[0] * q * q
        Qh = hv.Q.reshape(C, 4, -1)
        err_u = np.abs(Q_par - (Qh[:, 0] + Qh[:, 1]))
        err_p = np.abs(Q_par - (Qh[:, 2] + Qh[:, 3]))
        area = (cells[:, 1] - cells[:, 0]) * (cells[:, 3] - cells[:, 2]) / FOUR_PI
        allow = pol.quad_tol * np.maximum(Qabs_par, pol.abs_floor * scale * area[:, None])
        worst_u = (err_u / allow).max(axis=1)
        worst_p = (err_p / allow).max(axis=1)
        split_u = worst_u >= worst_p
        ok = np.maximum(worst_u, worst_p) <= 1.0
        if pol.max_gap is not None:
            gu, gp = _gap(hv, np.arange(hv.cells.shape[0]), q)
            gu, gp = gu.reshape(C, 4).max(axis=1), gp.reshape(C, 4).max(axis=1)
            ok &= np.maximum(gu, gp) <= pol.max_gap
            split_u = np.where(np.maximum(worst_u, worst_p) <= 1.0, gu >= gp, split_u)
        if level == pol.max_levels - 1:
            ok[:] = True
        # children in the chosen direction
        pick = np.where(split_u[:, None], np.array([0, 1]), np.array([2, 3]))
        child_idx = (np.arange(C)[:, None] * 4 + pick)
        acc = child_idx[ok].reshape(-1)
        if acc.size:
            accepted.append(_select(hv, acc))
        nxt = child_idx[~ok].reshape(-1)
        cells = hv.cells[nxt]
        Q_par = hv.Q[nxt]
        Qabs_par = hv.Qabs[nxt]
        held = sum(a["w"].shape[0] for a in accepted)
        if held + 4 * cells.shape[0] * q * q > pol.max_nodes:
            raise RefinementBudgetExceeded(
                f"adaptive quadrature needs more than {pol.max_nodes} nodes (level {level})")
    nodes = {key: np.concatenate([a[key] for a in accepted]) for key in accepted[0]}
    integral = (nodes["w"][:, None] * nodes["values"]).sum(axis=0)
    info = {"nodes": nodes["w"].shape[0], "evaluations": spent, "levels": level + 1}
    return nodes, integral, info


def _select(ev, cell_ids):
    """Per-node arrays of the given cells of an evaluated batch."""
    nq = ev.nq
    ids = (cell_ids[:, None] * nq + np.arange(nq)[None, :]).reshape(-1)
    out = {"w": ev.w[ids], "u": ev.u[ids], "phi": ev.phi[ids]}
    for key, val in ev.data.items():
        out[key] = val[ids]
    return out


def uniform_line_grid(n_u, n_phi):
    """Tensor rule: Gauss-Legendre in ``u``, trapezoid in ``phi``."""
    x, w = _gauss(n_u)
    phi = 2 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    U, P = np.meshgrid(x, phi, indexing="ij")
    W = np.repeat(w, n_phi) * (2 * np.pi / n_phi) / FOUR_PI
    return U.reshape(-1), P.reshape(-1), W
