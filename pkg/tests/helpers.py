"""Shared test fixtures: random network factories and independent oracles."""

import numpy as np

from netctl.netmodel import network_from_adjacency


def random_symmetric_stable(rng, n, radius=None):
    if radius is None:
        radius = rng.uniform(0.3, 0.95)
    M = rng.standard_normal((n, n))
    S = 0.5 * (M + M.T)
    S *= radius / np.max(np.abs(np.linalg.eigvalsh(S)))
    return network_from_adjacency(S)


def random_stable(rng, n, radius=None):
    if radius is None:
        radius = rng.uniform(0.3, 0.9)
    M = rng.standard_normal((n, n))
    M *= radius / np.max(np.abs(np.linalg.eigvals(M)))
    return network_from_adjacency(M)


def ring_with_chords(rng, n, radius=0.9, chords=0, band=2):
    """Connected symmetric net: banded ring plus optional random chords."""
    A = np.zeros((n, n))
    for k in range(1, band + 1):
        for i in range(n):
            A[i, (i + k) % n] = A[(i + k) % n, i] = 1.0 / k
    np.fill_diagonal(A, 1.0)
    for _ in range(chords):
        i, j = rng.choice(n, size=2, replace=False)
        w = rng.uniform(0.2, 1.0)
        A[i, j] = A[j, i] = w
    A *= radius / np.max(np.abs(np.linalg.eigvalsh(A)))
    return network_from_adjacency(A)


def power_sum_gramian(A, B, T):
    """Reference Gramian via explicit matrix powers."""
    A = np.asarray(A, dtype=float)
    BBT = B @ B.T
    W = np.zeros_like(A)
    for t in range(T):
        P = np.linalg.matrix_power(A, t)
        W += P @ BBT @ P.T
    return W


def random_control_set(rng, n, m):
    return tuple(sorted(rng.choice(n, size=m, replace=False).tolist()))


def random_unit_vector(rng, n):
    x = rng.standard_normal(n)
    return x / np.linalg.norm(x)
