"""Trapping checks, attracting sets and the attracting current."""
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_random_state, stream
from .currents import (adaptive_pushforward, bump, coordinate_weight, cutoff_omega, omega, pair,
                       strictly_psh_form)
from .endomorphism import power_map, projective_jacobian, push_tangents
from .exceptions import NonConvergence, TrappingViolated
from .projective import LinearSubspace, fs_distance, normalize, random_points
from .quadrature import RefinePolicy
from .regions import fiber_cone, torus_complement


# -- hypothesis checks -------------------------------------------------------------

@dataclass
class TrappingReport:
    margin: float
    boundary_margin: float
    interior_margin: float
    center_ok: bool
    line_ok: bool
    preimage_violations: int
    witness: np.ndarray = None
    samples: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.margin > 0 and self.preimage_violations == 0


def boundary_points(U, inside, outside, iters=60):
    """Points of ``{u = 0}`` by bisection along FS geodesics from inside to outside."""
    p = inside / np.linalg.norm(inside, axis=1)[:, None]
    q = outside / np.linalg.norm(outside, axis=1)[:, None]
    ph = np.sum(np.conj(p) * q, axis=1)
    q = q * np.where(np.abs(ph) > 0, np.conj(ph) / np.maximum(np.abs(ph), 1e-300), 1.0)[:, None]
    lo = np.zeros(p.shape[0])
    hi = np.ones(p.shape[0])
    for _ in range(iters):
        mid = (lo + hi) / 2
        inside_mid = U.u((1 - mid)[:, None] * p + mid[:, None] * q) < 0
        lo = np.where(inside_mid, mid, lo)
        hi = np.where(inside_mid, hi, mid)
    return normalize((1 - hi)[:, None] * p + hi[:, None] * q)


def check_trapping(f, U, boundary_samples=2000, seed=0, interior_samples=2000,
                   preimage_samples=64, raise_on_violation=True):
    """Sampled certificate that ``f(U)`` is relatively compact in ``U``.

    The margin is the minimum of ``-u(f(x))`` over boundary and interior
    samples.  Complement points are also pulled back one step; a preimage
    inside ``U`` is a direct violation.
    """
    from .homotopy import solve_fibers

    rng = check_random_state(seed)
    inside = U.sample_interior(max(boundary_samples, interior_samples), rng)
    outside = U.sample_complement(boundary_samples, rng)
    B = boundary_points(U, inside[:boundary_samples], outside[:boundary_samples])
    ub = -U.u(f.lift(B))
    ui = -U.u(f.lift(inside[:interior_samples]))
    margin = float(min(ub.min(), ui.min()))
    witness = B[np.argmin(ub)] if ub.min() <= ui.min() else inside[np.argmin(ui)]
    cp = U.projection
    center = cp.center.orthonormal_basis
    center_ok = bool(np.all(U.u(center) > 0))
    line_pts = cp.target.orthonormal_basis.T @ (rng.standard_normal((cp.target.orthonormal_basis.shape[0], 256))
                                               + 1j * rng.standard_normal((cp.target.orthonormal_basis.shape[0], 256)))
    line_ok = bool(np.all(U.u(line_pts.T) < 0))
    viol = 0
    if preimage_samples:
        comp = U.sample_complement(preimage_samples, rng)
        for P, _ in solve_fibers(f, comp, allow_critical=True):
            bad = U.u(P) < 0
            if np.any(bad):
                if viol == 0:
                    witness = P[np.argmax(bad)]
                viol += int(bad.sum())
    rep = TrappingReport(margin, float(ub.min()), float(ui.min()), center_ok, line_ok, viol, witness,
                         {"boundary": boundary_samples, "interior": interior_samples,
                          "preimage": preimage_samples, "seed": seed})
    if rep.ok:
        U.validated_margin = margin
    elif raise_on_violation:
        raise TrappingViolated(f"f(U) is not inside U (margin {margin:.3g}, {viol} preimage violations)",
                               witness=witness)
    return rep


@dataclass
class StarShapeReport:
    passed: bool
    violations: int
    rays: int
    witness: dict = None


def check_star_shaped(U, rays_per_fiber=8, fibers=32, seed=0, t_samples=600):
    """Check that each fiber section ``{t >= 0 : u(x + t dir) < 0}`` is an interval at 0.

    ``x`` runs over sampled points of ``L`` and ``dir`` over unit multiples of
    the center lift.  Rays are parametrized by ``t = tan(beta)`` so they
    reach all the way to the center.
    """
    rng = check_random_state(seed)
    cp = U.projection
    Lb = cp.target.orthonormal_basis
    c = cp.center.orthonormal_basis[0]
    beta = np.linspace(0, np.pi / 2, t_samples, endpoint=False)
    t = np.tan(beta)
    viol, first = 0, None
    for _ in range(fibers):
        coef = rng.standard_normal(Lb.shape[0]) + 1j * rng.standard_normal(Lb.shape[0])
        x = coef @ Lb
        x = x / np.max(np.abs(x))
        for _ in range(rays_per_fiber):
            ph = np.exp(2j * np.pi * rng.uniform())
            pts = x[None, :] + (t * ph)[:, None] * c[None, :]
            inside = U.u(pts) < 0
            # star-shaped: inside at 0, and no return after the first exit
            ok = bool(inside[0])
            if ok:
                out = np.flatnonzero(~inside)
                ok = out.size == 0 or not np.any(inside[out[0]:])
            if not ok:
                viol += 1
                if first is None:
                    out = np.flatnonzero(~inside)
                    back = np.flatnonzero(inside[out[0]:]) + out[0] if out.size else np.array([], int)
                    first = {"base": normalize(x), "direction": ph * c,
                             "inside_at_0": bool(inside[0]),
                             "exit_t": float(t[out[0]]) if out.size else None,
                             "reentry_t": float(t[back[0]]) if back.size else None}
    return StarShapeReport(viol == 0, viol, fibers * rays_per_fiber, first)


# -- attracting sets ---------------------------------------------------------------

def attracting_set(f, U, n, grid_size=2000, seed=0):
    """Images under ``f^n`` of an FS-uniform sample of ``U``."""
    rng = check_random_state(seed)
    X = U.sample_interior(grid_size, rng)
    return f.iterate(X, n) if n else X


def hausdorff(A, B, chunk=512):
    """FS Hausdorff distance between two point clouds."""
    def directed(P, Q):
        best = 0.0
        for s in range(0, P.shape[0], chunk):
            D = fs_distance(P[s:s + chunk, None, :], Q[None, :, :])
            best = max(best, float(D.min(axis=1).max()))
        return best
    return max(directed(A, B), directed(B, A))


def distance_to_set(P, Q, chunk=512):
    """``min_q d(p, q)`` for each ``p``."""
    out = np.empty(P.shape[0])
    for s in range(0, P.shape[0], chunk):
        out[s:s + chunk] = fs_distance(P[s:s + chunk, None, :], Q[None, :, :]).min(axis=1)
    return out


# -- attracting current --------------------------------------------------------------

@dataclass
class ConvergenceDiagnostic:
    form_names: list
    ns: list = field(default_factory=list)
    pairings: list = field(default_factory=list)
    masses: list = field(default_factory=list)
    cauchy_gaps: list = field(default_factory=list)
    limit_estimates: np.ndarray = None
    tol: float = 1e-3
    support_u_max: float = None
    warnings: list = field(default_factory=list)

    def as_array(self):
        return np.array(self.pairings)


def default_forms(center_index=2):
    """A strictly ``dd^c``-positive form plus two localized cutoff forms."""
    others = [i for i in range(3) if i != center_index]
    p = np.zeros(3, dtype=complex)
    p[others] = 1.0
    return [strictly_psh_form(center_index),
            cutoff_omega(coordinate_weight(others[0]), f"w{others[0]}*omega"),
            cutoff_omega(bump(p, 0.7), "bump*omega")]


def nearby_lines(L, count, radius=0.05, seed=0):
    """Random lines ``(I + radius G) L`` with ``|G|_F = 1``."""
    sub = L if isinstance(L, LinearSubspace) else LinearSubspace(L)
    B = sub.orthonormal_basis
    m = B.shape[1]
    out = []
    for i in range(count):
        rng = stream(seed, i)
        G = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        G /= np.linalg.norm(G)
        out.append(LinearSubspace(B @ (np.eye(m) + radius * G).T))
    return out


def attracting_current(f, U, L, n_max, forms=None, policy=None, tol=2e-3, n_min=0,
                       raise_on_nonconvergence=False):
    """Normalized pushforwards ``d^-n (f^n)_*[L']`` for ``n = n_min..n_max``.

    Returns the last current and the convergence diagnostic.  Limits are
    recorded once the Cauchy gaps of all pairings stay below ``tol`` for three
    consecutive steps.
    """
    forms = default_forms(2) if forms is None else forms
    policy = policy or RefinePolicy(quad_tol=1e-4)
    diag = ConvergenceDiagnostic([fm.name for fm in forms], tol=tol)
    if U is not None and U.u(L.orthonormal_basis if isinstance(L, LinearSubspace) else L).max() >= 0:
        diag.warnings.append("starting line leaves U")
    S = None
    for n in range(n_min, n_max + 1):
        S = adaptive_pushforward(L, f, n, policy, forms)
        p = [pair(S, fm) for fm in forms]
        diag.ns.append(n)
        diag.pairings.append(p)
        diag.masses.append(S.mass())
        if len(diag.pairings) > 1:
            diag.cauchy_gaps.append(float(np.max(np.abs(np.subtract(p, diag.pairings[-2])))))
    g = diag.cauchy_gaps
    if len(g) >= 3 and all(v < tol for v in g[-3:]):
        diag.limit_estimates = np.array(diag.pairings[-1])
    elif raise_on_nonconvergence and len(g) >= 2 and g[-1] >= g[0]:
        raise NonConvergence(f"Cauchy gaps do not decrease: {g}")
    else:
        diag.warnings.append("pairings have not stabilized")
    if U is not None:
        diag.support_u_max = float(U.u(S.points).max())
    return S, diag


# -- the counterexample ---------------------------------------------------------------

def _cluster_stats(P):
    """Within-cluster and between-cluster gaps of pairing vectors ``P[c, i, :]``."""
    cent = P.mean(axis=1)
    within = max(float(np.max(np.abs(P[c][:, None, :] - P[c][None, :, :]))) for c in range(P.shape[0]))
    between = min(float(np.max(np.abs(cent[a] - cent[b])))
                  for a in range(P.shape[0]) for b in range(a + 1, P.shape[0]))
    return cent, within, between


def counterexample_run(d=2, n=6, lines_per_cluster=3, seed=0, radius=0.05, policy=None):
    """The power map with the torus-complement region.

    Lines near each coordinate line ``{z_i = 0}`` are pushed forward; the
    limits cluster at the three coordinate-line currents.  A control run in
    a single star-shaped sector produces a single cluster.
    """
    f = power_map(2, d)
    U = torus_complement(2.0)
    forms = [cutoff_omega(coordinate_weight(j), f"w{j}*omega") for j in range(3)]
    policy = policy or RefinePolicy(quad_tol=1e-4)
    P = np.zeros((3, lines_per_cluster, 3))
    for i in range(3):
        base = LinearSubspace(np.eye(3)[[j for j in range(3) if j != i]])
        for r, L in enumerate(nearby_lines(base, lines_per_cluster, radius, seed + 101 * i)):
            S = adaptive_pushforward(L, f, n, policy, forms)
            P[i, r] = [pair(S, fm) for fm in forms]
    cent, within, between = _cluster_stats(P)
    star = check_star_shaped(U, seed=seed)
    # control: a single sector around {z2 = 0}
    Uc = fiber_cone(0.5)
    C = np.zeros((1, lines_per_cluster, 3))
    base = LinearSubspace(np.eye(3)[[0, 1]])
    for r, L in enumerate(nearby_lines(base, lines_per_cluster, radius, seed + 999)):
        S = adaptive_pushforward(L, f, n, policy, forms)
        C[0, r] = [pair(S, fm) for fm in forms]
    control_spread = float(np.max(np.abs(C[0][:, None, :] - C[0][None, :, :])))
    return {"pairings": P, "centroids": cent, "within_gap": within, "between_gap": between,
            "ratio": between / max(within, 1e-300), "star_shape": star,
            "control_star_shape": check_star_shaped(Uc, seed=seed), "control_pairings": C[0],
            "control_spread": control_spread, "n": n, "d": d, "seed": seed}


# -- potentials and Jacobians ------------------------------------------------------------

def potential_comparison(f, U, line_S, line_tau, n, grid=10_000, u_points=1_000, seed=0, tol=1e-2):
    """Compare canonical potentials of two normalized image curves.

    Both currents ``d^-n (f^n)_*[L]`` are exact curves ``[C]/deg C``; their
    potentials come from the implicit equations.
    """
    from .algebraic import implicitize_image
    from .green import canonical_potential_of_curve

    center = U.projection.center.orthonormal_basis[0]
    pots = []
    for L in (line_S, line_tau):
        img = implicitize_image(L, f, n)
        pots.append(canonical_potential_of_curve(img.poly, center))
    gS, gT = pots
    rng = check_random_state(seed)
    G = random_points(f.k, grid, rng)
    diff_grid = gS(G) - gT(G)
    X = U.sample_interior(u_points, rng)
    diff_u = gS(X) - gT(X)
    return {"max_diff_grid": float(np.nanmax(diff_grid)), "max_abs_diff_U": float(np.nanmax(np.abs(diff_u))),
            "g_S_at_I": float(gS(center)), "g_tau_at_I": float(gT(center)),
            "upper_ok": bool(np.nanmax(diff_grid) <= tol), "equal_on_U": bool(np.nanmax(np.abs(diff_u)) <= tol),
            "grid": grid, "u_points": u_points, "tol": tol, "n": n}


def jacobian_contraction(f, U, samples=5000, seed=0):
    """Largest FS Jacobian modulus on sampled points of ``U``.

    Also reports the stretch factors along the fiber direction (toward the
    center) and along the projection target, whose product bounds the
    Jacobian for this splitting.
    """
    rng = check_random_state(seed)
    X = U.sample_interior(samples, rng)
    jac = projective_jacobian(f, X)
    cp = U.projection
    c = cp.center.orthonormal_basis[0]
    fiber_dir = np.broadcast_to(c, X.shape)
    PL = X @ cp.P_L.T
    Lb = cp.target.orthonormal_basis
    # a direction along the target at pi(x): any vector of L orthogonal to pi(x)
    along = np.empty_like(X)
    for i in range(X.shape[0]):
        v = Lb[1] if Lb.shape[0] > 1 else Lb[0]
        w = v - (np.vdot(PL[i], v) / np.vdot(PL[i], PL[i])) * PL[i]
        if np.linalg.norm(w) < 1e-8:
            w = Lb[0] - (np.vdot(PL[i], Lb[0]) / np.vdot(PL[i], PL[i])) * PL[i]
        along[i] = w
    _, _, lt = push_tangents(f, X, fiber_dir, 1)
    _, _, la = push_tangents(f, X, along, 1)
    mx = float(jac.max())
    return {"max_jacobian": mx, "uniqueness_flag": bool(mx < 1), "max_transverse": float(np.exp(0.5 * lt).max()),
            "max_along": float(np.exp(0.5 * la).max()), "samples": samples, "seed": seed,
            "argmax": X[int(np.argmax(jac))]}


def lebesgue_preimage_stat(f, U, n_values, point_samples=20, seed=0):
    """Average of ``#(f^-n(a) in U) / d^n`` over FS-uniform points ``a``.

    One preimage tree per point is expanded level by level, and every
    requested level is read off that tree.  Counts use multiplicity.
    """
    from .homotopy import solve_fibers

    n_values = sorted(int(n) for n in n_values)
    nmax = n_values[-1]
    stat = np.zeros(len(n_values))
    totals = np.zeros((point_samples, len(n_values)), dtype=np.int64)
    vacuous = bool(np.all(U.u(random_points(f.k, 4096, np.random.default_rng(seed))) < 0))
    for i in range(point_samples):
        a = random_points(f.k, 1, stream(seed, i))
        pts, mult = a, np.ones(1, dtype=np.int64)
        for lvl in range(1, nmax + 1):
            fib = solve_fibers(f, pts, allow_critical=True)
            pts = np.concatenate([P for P, _ in fib])
            mult = np.concatenate([m * m0 for (_, m), m0 in zip(fib, mult)])
            if lvl in n_values:
                j = n_values.index(lvl)
                inside = U.u(pts) < 0
                stat[j] += mult[inside].sum() / float(f.d) ** lvl
                totals[i, j] = mult.sum()
    stat /= point_samples
    return {"n": n_values, "statistic": stat, "fiber_totals": totals, "vacuous": vacuous,
            "strictly_decreasing": bool(np.all(np.diff(stat) < 0)), "seed": seed}
