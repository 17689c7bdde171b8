"""Weighted network models: construction, file formats, generators, spectra.

The convention throughout is that ``A[i, j]`` weights the influence of node j
on node i, so the free dynamics read ``x(t+1) = A @ x(t)`` (row i aggregates
columns).  Node indices are 0-based in code; file formats and the CLI use
1-based indices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import as_square_matrix, check_vector, is_connected, is_symmetric
from .errors import NetworkFormatError

#: Margin below the unit circle for declaring Schur stability.
STABILITY_MARGIN = 1e-9

_SYMMETRY_TOL = 1e-12

FORMATS = ("edge-list-csv", "matrix-market", "dense-json")

_SUFFIX_FORMATS = {".csv": "edge-list-csv", ".mtx": "matrix-market", ".json": "dense-json"}


@dataclass(frozen=True, eq=False)
class Network:
    """A weighted directed graph on ``n`` nodes with weight matrix ``A``.

    ``directed`` may only be False when A is symmetric to tolerance.  The
    weight matrix is stored read-only; instances are safe to share.
    """

    n: int
    A: np.ndarray
    directed: bool = True

    def __post_init__(self):
        A = as_square_matrix(self.A)
        if self.n < 1:
            raise ValueError("a network needs at least one node")
        if A.shape[0] != self.n:
            raise ValueError(f"n = {self.n} does not match weight matrix of shape {A.shape}")
        if not self.directed and not is_symmetric(A, _SYMMETRY_TOL):
            raise ValueError("undirected network requires a symmetric weight matrix")
        A = A.copy()
        A.flags.writeable = False
        object.__setattr__(self, "A", A)

    @property
    def symmetric(self) -> bool:
        return is_symmetric(self.A, _SYMMETRY_TOL)

    def transpose(self) -> "Network":
        return Network(self.n, self.A.T.copy(), self.directed)


def network_from_adjacency(A, directed=None) -> Network:
    """Wrap a weight matrix in a Network, auto-detecting directedness."""
    A = as_square_matrix(A)
    if directed is None:
        directed = not is_symmetric(A, _SYMMETRY_TOL)
    return Network(A.shape[0], A, directed)


@dataclass(frozen=True, eq=False)
class SpectralFacts:
    """Eigenstructure summary of a network's weight matrix.

    ``eigenvectors`` has unit-norm columns; ``eigenvector_cond`` is its
    2-norm condition number.  ``diagonalizable`` is a numerical verdict: the
    smallest singular value of the unit-column eigenvector matrix must stay
    above the tolerance used at construction.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    eigenvector_cond: float
    min_modulus: float
    spectral_radius: float
    schur_stable: bool
    diagonalizable: bool
    normal: bool
    symmetric: bool

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]


def spectral_facts(net: Network, tol: float = 1e-8) -> SpectralFacts:
    """Full eigendecomposition plus the derived flags used by the bounds.

    Symmetric matrices go through the symmetric eigensolver (orthonormal
    eigenvectors), normal ones through a complex Schur form (unitary
    eigenvectors), everything else through a general solve with columns
    rescaled to unit norm.
    """
    A = net.A
    fro = float(np.linalg.norm(A, "fro"))
    symmetric = is_symmetric(A, _SYMMETRY_TOL)
    commutator = float(np.linalg.norm(A @ A.T - A.T @ A, "fro"))
    normal = commutator <= tol * max(fro * fro, 1.0)
    if symmetric:
        w, V = np.linalg.eigh(A)
        w = w.astype(complex)
        V = V.astype(complex)
    elif normal:
        Tm, Z = scipy.linalg.schur(A.astype(complex), output="complex")
        w = np.diag(Tm).copy()
        V = Z
    else:
        w, V = np.linalg.eig(A)
        V = V / np.linalg.norm(V, axis=0, keepdims=True)
    sv = np.linalg.svd(V, compute_uv=False)
    smin = float(sv[-1])
    cond = float(sv[0] / smin) if smin > 0 else math.inf
    mods = np.abs(w)
    w.flags.writeable = False
    V.flags.writeable = False
    return SpectralFacts(
        eigenvalues=w,
        eigenvectors=V,
        eigenvector_cond=cond,
        min_modulus=float(mods.min()),
        spectral_radius=float(mods.max()),
        schur_stable=bool(mods.max() < 1.0 - STABILITY_MARGIN),
        diagonalizable=bool(smin > tol),
        normal=bool(normal),
        symmetric=bool(symmetric),
    )


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def line_network(n: int) -> Network:
    """Directed chain where each node is fed by its predecessor with weight 1/2."""
    if n < 1:
        raise ValueError("line network needs n >= 1")
    A = np.zeros((n, n))
    idx = np.arange(1, n)
    A[idx, idx - 1] = 0.5
    return Network(n, A, directed=True)


def circulant_network(n: int, rho: float) -> Network:
    """Symmetric ring: every node couples to itself and both neighbours with rho/3."""
    if n < 3:
        raise ValueError("circulant network needs n >= 3")
    if rho <= 0:
        raise ValueError("rho must be positive")
    A = np.zeros((n, n))
    i = np.arange(n)
    A[i, i] = rho / 3.0
    A[i, (i + 1) % n] = rho / 3.0
    A[i, (i - 1) % n] = rho / 3.0
    return Network(n, A, directed=False)


def asymmetric_line_network(n: int) -> Network:
    """Tridiagonal chain with self-weight 1/3 and couplings alternating 1/6, 2/3.

    Rows with even 0-based index use 1/6 on both off-diagonals, odd rows 2/3.
    A diagonal similarity with diag(1, 2, 1, 2, ...) symmetrizes the matrix.
    """
    if n < 2:
        raise ValueError("asymmetric line network needs n >= 2")
    A = np.zeros((n, n))
    np.fill_diagonal(A, 1.0 / 3.0)
    for i in range(n):
        w = 1.0 / 6.0 if i % 2 == 0 else 2.0 / 3.0
        if i > 0:
            A[i, i - 1] = w
        if i < n - 1:
            A[i, i + 1] = w
    return Network(n, A, directed=True)


def power_grid_network(topology: Network, damping, h: float) -> Network:
    """Forward-Euler step of first-order generator dynamics over a susceptance graph.

    ``A[i, i] = 1 - (h / d_i) * sum_j k_ij`` and ``A[i, j] = (h / d_i) * k_ij``;
    the diagonal of the susceptance matrix is ignored.  Rows always sum to one.
    """
    K = topology.A
    n = topology.n
    if not is_symmetric(K, _SYMMETRY_TOL):
        raise ValueError("susceptance topology must be symmetric")
    if np.any(K < 0):
        raise ValueError("susceptances must be nonnegative")
    d = check_vector(damping, n, "damping")
    if np.any(d <= 0):
        raise ValueError("all damping coefficients must be positive")
    if h < 0:
        raise ValueError("step size h must be nonnegative")
    Koff = K.copy()
    np.fill_diagonal(Koff, 0.0)
    A = (h / d)[:, None] * Koff
    np.fill_diagonal(A, 1.0 - A.sum(axis=1))
    return network_from_adjacency(A)


def consensus_network(base: Network, weights=1.0) -> Network:
    """Row-stochastic lazy-random-walk opinion matrix on an undirected graph.

    ``weights`` is either a scalar applied to every edge, or one positive
    value per undirected edge in (i < j) row-major order.  The base graph
    must be connected so that the unit eigenvalue is simple.
    """
    n = base.n
    if not is_symmetric(base.A, _SYMMETRY_TOL):
        raise ValueError("consensus base graph must be undirected (symmetric weights)")
    if n == 1:
        return network_from_adjacency(np.ones((1, 1)))
    mask = base.A != 0
    np.fill_diagonal(mask, False)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if mask[i, j] or mask[j, i]]
    W = np.zeros((n, n))
    if np.isscalar(weights):
        if weights <= 0:
            raise ValueError("edge weights must be positive")
        for i, j in edges:
            W[i, j] = W[j, i] = float(weights)
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != len(edges):
            raise ValueError(f"expected {len(edges)} edge weights, got {w.shape[0]}")
        if np.any(w <= 0):
            raise ValueError("edge weights must be positive")
        for (i, j), wij in zip(edges, w):
            W[i, j] = W[j, i] = wij
    if not is_connected(W):
        raise ValueError("consensus base graph must be connected")
    deg = W.sum(axis=1)
    A = 0.5 * (np.eye(n) + W / deg[:, None])
    return network_from_adjacency(A)


def sis_network(contacts: Network, alpha, beta, h: float) -> Network:
    """One-step Euler map of linearized infection spreading over a contact graph.

    Off-diagonal entries are ``h * beta_i * contacts[i, j]``; the diagonal is
    ``1 - h * alpha_i``.
    """
    n = contacts.n
    a = check_vector(alpha, n, "alpha")
    b = check_vector(beta, n, "beta")
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("curing and infection rates must be nonnegative")
    if h < 0:
        raise ValueError("step size h must be nonnegative")
    A = h * b[:, None] * contacts.A
    np.fill_diagonal(A, 1.0 - h * a)
    return network_from_adjacency(A)


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------


def _resolve_format(path, format):
    if format is not None:
        if format not in FORMATS:
            raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
        return format
    for suffix, fmt in _SUFFIX_FORMATS.items():
        if str(path).endswith(suffix):
            return fmt
    raise ValueError(f"cannot infer format from {path!r}; pass format explicitly")


def load_network(path, format=None) -> Network:
    """Read a network from edge-list CSV, Matrix Market, or dense JSON.

    File indices are 1-based; duplicate edges and non-finite weights are
    rejected with the offending line number.
    """
    fmt = _resolve_format(path, format)
    if fmt == "edge-list-csv":
        return _load_edge_list(path)
    if fmt == "matrix-market":
        return _load_matrix_market(path)
    return _load_dense_json(path)


def save_network(net: Network, path, format=None) -> None:
    fmt = _resolve_format(path, format)
    if fmt == "edge-list-csv":
        _save_edge_list(net, path)
    elif fmt == "matrix-market":
        _save_matrix_market(net, path)
    else:
        _save_dense_json(net, path)


def _parse_index(token, path, lineno):
    try:
        idx = int(token)
    except ValueError:
        raise NetworkFormatError(f"invalid node index {token!r}", path, lineno) from None
    if idx < 1:
        raise NetworkFormatError(f"node indices are 1-based, got {idx}", path, lineno)
    return idx


def _parse_weight(token, path, lineno):
    try:
        w = float(token)
    except ValueError:
        raise NetworkFormatError(f"invalid weight {token!r}", path, lineno) from None
    if not math.isfinite(w):
        raise NetworkFormatError(f"non-finite weight {token!r}", path, lineno)
    return w


def _load_edge_list(path) -> Network:
    entries = {}
    n_header = None
    max_idx = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("n="):
                if n_header is not None:
                    raise NetworkFormatError("duplicate n= header", path, lineno)
                try:
                    n_header = int(line[2:])
                except ValueError:
                    raise NetworkFormatError(f"invalid header {line!r}", path, lineno) from None
                if n_header < 1:
                    raise NetworkFormatError(f"invalid node count {n_header}", path, lineno)
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise NetworkFormatError(f"expected 'i,j,w', got {line!r}", path, lineno)
            i = _parse_index(parts[0], path, lineno)
            j = _parse_index(parts[1], path, lineno)
            w = _parse_weight(parts[2], path, lineno)
            if (i, j) in entries:
                raise NetworkFormatError(f"duplicate edge ({i},{j})", path, lineno)
            entries[(i, j)] = w
            max_idx = max(max_idx, i, j)
    n = n_header if n_header is not None else max_idx
    if n == 0:
        raise NetworkFormatError("empty edge list without an n= header", path)
    if max_idx > n:
        raise NetworkFormatError(f"node index {max_idx} exceeds declared n={n}", path)
    A = np.zeros((n, n))
    for (i, j), w in entries.items():
        A[i - 1, j - 1] = w
    return network_from_adjacency(A)


def _save_edge_list(net: Network, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n={net.n}\n")
        rows, cols = np.nonzero(net.A)
        for i, j in zip(rows, cols):
            fh.write(f"{i + 1},{j + 1},{float(net.A[i, j])!r}\n")


def _load_matrix_market(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        tokens = header.strip().lower().split()
        if not header.startswith("%%MatrixMarket") or len(tokens) < 5:
            raise NetworkFormatError("missing MatrixMarket header", path, 1)
        if tokens[1:5] != ["matrix", "coordinate", "real", "general"]:
            raise NetworkFormatError(
                f"unsupported MatrixMarket type {' '.join(tokens[1:5])!r}; "
                "only 'matrix coordinate real general' is supported",
                path,
                1,
            )
        lineno = 1
        dims = None
        entries = {}
        for raw in fh:
            lineno += 1
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            parts = line.split()
            if dims is None:
                if len(parts) != 3:
                    raise NetworkFormatError(f"invalid size line {line!r}", path, lineno)
                r = _parse_index(parts[0], path, lineno)
                c = _parse_index(parts[1], path, lineno)
                try:
                    nnz = int(parts[2])
                except ValueError:
                    raise NetworkFormatError(f"invalid entry count {parts[2]!r}", path, lineno) from None
                if r != c:
                    raise NetworkFormatError(f"matrix must be square, got {r}x{c}", path, lineno)
                dims = (r, nnz)
                continue
            if len(parts) != 3:
                raise NetworkFormatError(f"expected 'i j w', got {line!r}", path, lineno)
            i = _parse_index(parts[0], path, lineno)
            j = _parse_index(parts[1], path, lineno)
            w = _parse_weight(parts[2], path, lineno)
            if i > dims[0] or j > dims[0]:
                raise NetworkFormatError(f"index ({i},{j}) out of range", path, lineno)
            if (i, j) in entries:
                raise NetworkFormatError(f"duplicate edge ({i},{j})", path, lineno)
            entries[(i, j)] = w
    if dims is None:
        raise NetworkFormatError("missing size line", path)
    if len(entries) != dims[1]:
        raise NetworkFormatError(f"expected {dims[1]} entries, found {len(entries)}", path)
    A = np.zeros((dims[0], dims[0]))
    for (i, j), w in entries.items():
        A[i - 1, j - 1] = w
    return network_from_adjacency(A)


def _save_matrix_market(net: Network, path) -> None:
    rows, cols = np.nonzero(net.A)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{net.n} {net.n} {len(rows)}\n")
        for i, j in zip(rows, cols):
            fh.write(f"{i + 1} {j + 1} {float(net.A[i, j])!r}\n")


def _load_dense_json(path) -> Network:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkFormatError(f"invalid JSON: {exc}", path, exc.lineno) from None
    try:
        n = int(obj["n"])
        A = np.asarray(obj["A"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise NetworkFormatError(f"invalid dense-json payload: {exc}", path) from None
    if A.shape != (n, n):
        raise NetworkFormatError(f"matrix shape {A.shape} does not match n={n}", path)
    if not np.all(np.isfinite(A)):
        raise NetworkFormatError("matrix contains non-finite entries", path)
    directed = obj.get("directed")
    return network_from_adjacency(A, directed=None if directed is None else bool(directed))


def _save_dense_json(net: Network, path) -> None:
    payload = {"n": net.n, "A": net.A.tolist(), "directed": bool(net.directed)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")
