"""Input validation helpers shared by the public modules."""

from __future__ import annotations

import math

import numpy as np


def as_square_matrix(X, name: str = "A") -> np.ndarray:
    A = np.asarray(X, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def is_symmetric(A: np.ndarray, tol: float = 1e-12) -> bool:
    if A.size == 0:
        return True
    scale = max(float(np.max(np.abs(A))), 1.0)
    return bool(np.max(np.abs(A - A.T)) <= tol * scale)


def check_horizon(horizon):
    """Normalize a control horizon: a positive integer, or math.inf."""
    if isinstance(horizon, float) and math.isinf(horizon) and horizon > 0:
        return math.inf
    if isinstance(horizon, (int, np.integer)) and not isinstance(horizon, bool):
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        return int(horizon)
    raise ValueError(f"horizon must be a positive integer or math.inf, got {horizon!r}")


def check_finite_horizon(horizon, context: str = "this operation"):
    T = check_horizon(horizon)
    if T is math.inf or T == math.inf:
        raise ValueError(f"{context} requires a finite horizon")
    return int(T)


def check_vector(x, n: int, name: str = "x") -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ValueError(f"{name} must be a vector of length {n}, got shape {np.shape(x)}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def check_unit_vector(x, n: int, name: str = "target", tol: float = 1e-9) -> np.ndarray:
    v = check_vector(x, n, name)
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"{name} must be unit norm, got ||{name}||_2 = {nrm:.12g}")
    return v


def is_connected(S: np.ndarray) -> bool:
    """Connectivity of the undirected graph whose edges are the nonzeros of S.

    The diagonal is ignored; S is expected symmetric (use a symmetrized view
    for directed weights).
    """
    n = S.shape[0]
    if n <= 1:
        return True
    adj = S != 0
    np.fill_diagonal(adj, False)
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i] & ~seen):
            seen[j] = True
            stack.append(j)
    return bool(seen.all())
