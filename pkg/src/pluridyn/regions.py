"""Trapping regions ``U = {u < 0}`` in P^k and the region-file format.

Region files are UTF-8 text: a first line ``region <kind>`` followed by
``name = value`` lines.  Kinds:

``fiber_cone``
    ``t`` (float), ``center_index`` (int, default k).  ``u = |P_I x| /
    |P_L x|_inf - t`` for the coordinate projection from ``e_center``.
``torus_complement``
    ``ratio`` (float, default 2).  ``U`` is the set where some coordinate
    modulus exceeds ``ratio`` times another.
``ball_complement``
    ``center`` (space separated ``re im`` pairs), ``radius``.  ``P^k`` minus
    a closed FS ball.
``expr``
    ``expr`` (numpy expression in ``z0 .. zk``, ``a0 .. ak`` for moduli,
    ``s`` for the fiber coordinate), ``center_index``.
"""
import numpy as np

from .exceptions import RegionFormatError
from .projective import coordinate_projection, fs_distance, normalize, random_points, sup_normalize


class TrappingRegion:
    """Open set ``U = {u < 0}`` together with a center projection.

    ``u`` is evaluated on sup-normalized lifts, so it only needs to be a
    function of the projective point.
    """

    def __init__(self, u, projection, k=2, name="region", params=None, complement_sampler=None):
        self._u = u
        self.projection = projection
        self.k = k
        self.name = name
        self.params = dict(params or {})
        self.validated_margin = None
        self._complement_sampler = complement_sampler

    def u(self, x):
        X = sup_normalize(np.atleast_2d(np.asarray(x, dtype=np.complex128)))
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.asarray(self._u(X), dtype=float)

    __call__ = u

    def contains(self, x):
        return self.u(x) < 0

    def gradient(self, x, h=1e-7):
        """Finite-difference gradient of ``u`` in real coordinates of the lift."""
        X = sup_normalize(np.atleast_2d(np.asarray(x, dtype=np.complex128)))
        m = X.shape[1]
        G = np.zeros((X.shape[0], 2 * m))
        for j in range(m):
            for part, step in ((0, h), (1, 1j * h)):
                E = np.zeros(m, dtype=np.complex128)
                E[j] = step
                G[:, 2 * j + part] = (self._u(X + E) - self._u(X - E)) / (2 * h)
        return G

    def sample_interior(self, count, rng, max_tries=200):
        """FS-uniform points of ``U`` by rejection."""
        out, got = [], 0
        for _ in range(max_tries):
            X = random_points(self.k, max(4 * count, 1024), rng)
            X = X[self.u(X) < 0]
            out.append(X)
            got += X.shape[0]
            if got >= count:
                break
        X = np.concatenate(out)[:count]
        if X.shape[0] < count:
            raise RuntimeError(f"region {self.name} is too thin to sample {count} points")
        return X

    def sample_complement(self, count, rng, max_tries=200):
        if self._complement_sampler is not None:
            return self._complement_sampler(count, rng)
        out, got = [], 0
        for _ in range(max_tries):
            X = random_points(self.k, max(4 * count, 1024), rng)
            X = X[self.u(X) >= 0]
            out.append(X)
            got += X.shape[0]
            if got >= count:
                break
        return np.concatenate(out)[:count]

    def spec(self):
        return {"kind": self.name, **self.params}

    def __repr__(self):
        return f"TrappingRegion({self.name}, {self.params})"


def fiber_cone(t=0.2, k=2, center_index=None):
    """``{|P_I x| < t |P_L x|_inf}``: a cone around ``L`` in the fibers of the projection."""
    c = k if center_index is None else int(center_index)
    cp = coordinate_projection(k, c)
    others = [i for i in range(k + 1) if i != c]

    def u(X):
        return np.abs(X[:, c]) / np.max(np.abs(X[:, others]), axis=1) - t

    return TrappingRegion(u, cp, k, "fiber_cone", {"t": t, "center_index": c})


def fiber_annulus(r_in=0.1, r_out=0.2, k=2, center_index=None):
    """``{r_in < |s| < r_out}`` in fiber coordinates (not star-shaped)."""
    c = k if center_index is None else int(center_index)
    cp = coordinate_projection(k, c)
    others = [i for i in range(k + 1) if i != c]

    def u(X):
        s = np.abs(X[:, c]) / np.max(np.abs(X[:, others]), axis=1)
        return np.maximum(r_in - s, s - r_out)

    return TrappingRegion(u, cp, k, "fiber_annulus", {"r_in": r_in, "r_out": r_out, "center_index": c})


def torus_complement(ratio=2.0, k=2, center_index=None):
    """``U = {max_i |z_i| > ratio * min_j |z_j|}``: the complement of a torus neighbourhood."""
    c = k if center_index is None else int(center_index)

    def u(X):
        A = np.abs(X)
        with np.errstate(divide="ignore"):
            return np.log(ratio) - (np.log(A.max(axis=1)) - np.log(A.min(axis=1)))

    return TrappingRegion(u, coordinate_projection(k, c), k, "torus_complement",
                          {"ratio": ratio, "center_index": c})


def ball_complement(center, radius, k=2, center_index=None):
    """``P^k`` minus the closed FS ball of the given radius."""
    ctr = normalize(np.asarray(center, dtype=np.complex128))
    c = k if center_index is None else int(center_index)

    def u(X):
        return radius - fs_distance(X, ctr)

    def sampler(count, rng):
        # uniform directions, radius by inverse CDF of sin^(2k-1) cos on [0, radius]
        m = ctr.shape[0]
        e = ctr / np.linalg.norm(ctr)
        V = rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m))
        V -= (V @ np.conj(e))[:, None] * e[None, :]
        V /= np.linalg.norm(V, axis=1)[:, None]
        r = np.arcsin(np.sin(radius) * rng.uniform(0, 1, count) ** (1.0 / (2 * k)))
        return normalize(np.cos(r)[:, None] * e[None, :] + np.sin(r)[:, None] * V)

    return TrappingRegion(u, coordinate_projection(k, c), k, "ball_complement",
                          {"center": ctr.tolist(), "radius": radius, "center_index": c}, sampler)


_SAFE = {name: getattr(np, name) for name in
         ("abs", "maximum", "minimum", "sqrt", "log", "exp", "real", "imag", "conj", "pi", "max", "min")}


def expression_region(expr, k=2, center_index=None):
    """Region from a numpy expression in ``z0..zk``, ``a0..ak`` and ``s``."""
    c = k if center_index is None else int(center_index)
    try:
        code = compile(expr, "<region>", "eval")
    except SyntaxError as exc:
        raise RegionFormatError(f"cannot parse expression {expr!r}: {exc}") from exc
    for name in code.co_names:
        if name not in _SAFE and not (name[0] in "za" and name[1:].isdigit()) and name != "s":
            raise RegionFormatError(f"unknown name {name!r} in region expression")
    others = [i for i in range(k + 1) if i != c]

    def u(X):
        env = dict(_SAFE)
        for i in range(k + 1):
            env[f"z{i}"] = X[:, i]
            env[f"a{i}"] = np.abs(X[:, i])
        env["s"] = X[:, c] / np.max(np.abs(X[:, others]), axis=1)
        return np.broadcast_to(eval(code, {"__builtins__": {}}, env), (X.shape[0],)).astype(float)

    return TrappingRegion(u, coordinate_projection(k, c), k, "expr", {"expr": expr, "center_index": c})


def _parse_complex_list(s):
    vals = [float(v) for v in s.split()]
    if len(vals) % 2:
        raise RegionFormatError("complex lists need re/im pairs")
    return [complex(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]


def parse_region(text):
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise RegionFormatError("empty region definition")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "region":
        raise RegionFormatError(f"bad header {lines[0]!r}; expected 'region <kind>'")
    kind = head[1]
    params = {}
    for ln in lines[1:]:
        if "=" not in ln:
            raise RegionFormatError(f"expected 'name = value', got {ln!r}")
        key, val = ln.split("=", 1)
        params[key.strip()] = val.strip()
    try:
        ci = int(params["center_index"]) if "center_index" in params else None
        k = int(params.get("k", 2))
        if kind == "fiber_cone":
            return fiber_cone(float(params.get("t", 0.2)), k, ci)
        if kind == "fiber_annulus":
            return fiber_annulus(float(params.get("r_in", 0.1)), float(params.get("r_out", 0.2)), k, ci)
        if kind == "torus_complement":
            return torus_complement(float(params.get("ratio", 2.0)), k, ci)
        if kind == "ball_complement":
            return ball_complement(_parse_complex_list(params["center"]), float(params["radius"]), k, ci)
        if kind == "expr":
            return expression_region(params["expr"], k, ci)
    except KeyError as exc:
        raise RegionFormatError(f"region {kind} is missing parameter {exc}") from exc
    except ValueError as exc:
        raise RegionFormatError(f"bad parameter value in region {kind}: {exc}") from exc
    raise RegionFormatError(f"unknown region kind {kind!r}")


def read_region(path):
    with open(path, encoding="utf-8") as fh:
        return parse_region(fh.read())


def region_to_text(U):
    lines = [f"region {U.name}"]
    for key, val in U.params.items():
        if key == "center":
            val = " ".join(f"{complex(z).real!r} {complex(z).imag!r}" for z in val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"
