"""Input validation helpers in the spirit of ``sklearn.utils.validation``.

scikit-learn's ``check_array`` refuses complex input, and homogeneous
coordinates are complex, so points get their own checker.
"""
import numbers

import numpy as np


def check_points(X, dim=None, ensure_2d=True, copy=False):
    """Return ``X`` as a complex array of homogeneous coordinates.

    A single point of shape ``(k+1,)`` is promoted to ``(1, k+1)`` when
    ``ensure_2d`` is set.
    """
    X = np.array(X, dtype=np.complex128) if copy else np.asarray(X, dtype=np.complex128)
    if X.ndim == 1 and ensure_2d:
        X = X[None, :]
    if X.ndim != (2 if ensure_2d else X.ndim) or X.shape[-1] < 2:
        raise ValueError(f"expected homogeneous coordinates, got shape {X.shape}")
    if dim is not None and X.shape[-1] != dim:
        raise ValueError(f"expected {dim} homogeneous coordinates, got {X.shape[-1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("homogeneous coordinates contain NaN or inf")
    return X


def check_random_state(seed):
    """Turn ``seed`` into a ``numpy.random.Generator``."""
    if seed is None or isinstance(seed, (numbers.Integral, np.integer)):
        return np.random.default_rng(seed)
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")


def stream(seed, *keys):
    """Independent generator for the stream keyed by ``(seed, *keys)``.

    Every parallel job derives its randomness from its own key so results do
    not depend on scheduling or thread count.
    """
    entropy = [int(seed if seed is not None else 0)] + [int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def check_positive_int(value, name, minimum=1):
    if not isinstance(value, (numbers.Integral, np.integer)) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
