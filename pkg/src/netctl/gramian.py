"""Controllability/observability Gramians, energy metrics, minimum-energy inputs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import check_finite_horizon, check_horizon, check_unit_vector, check_vector
from .errors import UncontrollableError, UnstableError
from .netmodel import STABILITY_MARGIN, Network

#: Horizon value standing for T -> infinity.
INFINITE = math.inf

#: Relative threshold on the smallest Gramian eigenvalue for the
#: controllability verdict.
DEFAULT_CTRB_TOL = 1e-10


@dataclass(frozen=True)
class ControlSet:
    """Duplicate-free, sorted 0-based node indices that receive inputs."""

    nodes: tuple

    def __post_init__(self):
        try:
            nodes = tuple(int(k) for k in self.nodes)
        except TypeError:
            raise ValueError(f"control set must be an iterable of indices, got {self.nodes!r}") from None
        if not nodes:
            raise ValueError("control set must be nonempty")
        srt = tuple(sorted(nodes))
        if len(set(srt)) != len(srt):
            raise ValueError("control set has duplicate nodes")
        if srt[0] < 0:
            raise ValueError("control node indices must be nonnegative")
        object.__setattr__(self, "nodes", srt)

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


def check_control_set(controls, n: int) -> ControlSet:
    ks = controls if isinstance(controls, ControlSet) else ControlSet(tuple(controls))
    if ks.nodes[-1] >= n:
        raise ValueError(f"control node {ks.nodes[-1]} out of range for n = {n}")
    return ks


@dataclass(frozen=True, eq=False)
class GramianReport:
    """A Gramian with its spectrum-derived energy metrics.

    ``controllable`` holds when the smallest eigenvalue clears the relative
    threshold used at construction.  ``trace_inverse``/``log_det`` are +inf /
    -inf for reports below that threshold.  ``deflated`` marks consensus
    networks whose Gramian lives in the reduced basis ``basis`` of the
    agreement-orthogonal subspace.
    """

    matrix: np.ndarray
    horizon: float
    eigenvalues: np.ndarray
    lambda_min: float
    trace: float
    trace_inverse: float
    log_det: float
    controllable: bool
    deflated: bool = False
    basis: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "horizon": "inf" if self.horizon == INFINITE else int(self.horizon),
            "lambda_min": self.lambda_min,
            "trace": self.trace,
            "trace_inverse": _json_float(self.trace_inverse),
            "log_det": _json_float(self.log_det),
            "controllable": self.controllable,
            "deflated": self.deflated,
            "W": self.matrix.tolist(),
        }


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A simulated run: states x(0..T), inputs u(0..T-1), input energy."""

    states: np.ndarray
    inputs: np.ndarray
    energy: float

    @property
    def horizon(self) -> int:
        return self.inputs.shape[0]

    def to_dict(self) -> dict:
        return {
            "states": self.states.tolist(),
            "inputs": self.inputs.tolist(),
            "energy": self.energy,
        }


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _freeze(A: np.ndarray) -> np.ndarray:
    A.flags.writeable = False
    return A


def _make_report(W, horizon, tol_ctrb, deflated=False, basis=None) -> GramianReport:
    W = 0.5 * (W + W.T)
    evals = np.linalg.eigvalsh(W)
    lam_min = float(max(evals[0], 0.0))
    lam_max = float(max(evals[-1], 0.0))
    controllable = bool(evals[0] > tol_ctrb * max(1.0, lam_max))
    if controllable:
        trace_inverse = float(np.sum(1.0 / evals))
        log_det = float(np.sum(np.log(evals)))
    else:
        trace_inverse = math.inf
        log_det = -math.inf
    return GramianReport(
        matrix=_freeze(W),
        horizon=horizon,
        eigenvalues=_freeze(evals),
        lambda_min=lam_min,
        trace=float(np.trace(W)),
        trace_inverse=trace_inverse,
        log_det=log_det,
        controllable=controllable,
        deflated=deflated,
        basis=basis,
    )


def input_matrix(controls, n: int) -> np.ndarray:
    """0/1 matrix whose columns are the canonical vectors of the control nodes."""
    ks = check_control_set(controls, n)
    B = np.zeros((n, len(ks)))
    B[list(ks.nodes), np.arange(len(ks))] = 1.0
    return B


def controllability_matrix(net: Network, controls, horizon) -> np.ndarray:
    """Horizontal stack of A^t B for t < T."""
    T = check_finite_horizon(horizon, "the controllability matrix")
    B = input_matrix(controls, net.n)
    blocks = [B]
    cur = B
    for _ in range(T - 1):
        cur = net.A @ cur
        blocks.append(cur)
    return np.hstack(blocks)


def _gramian_sum(A: np.ndarray, Q: np.ndarray, T: int) -> np.ndarray:
    """Sum of A^t Q A^t' over t < T.

    Plain accumulation W <- A W A' + Q for small T; binary splitting beyond,
    so very long horizons stay O(log T) matrix products.
    """
    n = A.shape[0]
    if T <= 64:
        W = np.zeros((n, n))
        for _ in range(T):
            W = A @ W @ A.T + Q
        return W
    W = np.zeros((n, n))
    P = np.eye(n)
    for bit in bin(T)[2:]:
        W = W + P @ W @ P.T
        P = P @ P
        if bit == "1":
            W = Q + A @ W @ A.T
            P = A @ P
    return W


def _matrix_geometric_sum(M: np.ndarray, T: int) -> np.ndarray:
    """Sum of M^t over t < T (one-sided), with the same splitting scheme."""
    n = M.shape[0]
    if T <= 64:
        S = np.zeros((n, n))
        for _ in range(T):
            S = M @ S + np.eye(n)
        return S
    S = np.zeros((n, n))
    P = np.eye(n)
    for bit in bin(T)[2:]:
        S = S + P @ S
        P = P @ P
        if bit == "1":
            S = np.eye(n) + M @ S
            P = M @ P
    return S


def _solve_lyapunov(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    W = scipy.linalg.solve_discrete_lyapunov(A, Q)
    W = 0.5 * (W + W.T)
    residual = float(np.linalg.norm(A @ W @ A.T + Q - W, "fro"))
    if residual > max(1e-9 * np.linalg.norm(W, "fro"), 1e-12):
        raise RuntimeError(f"discrete Lyapunov residual {residual:.3e} too large")
    return W


def _spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def gramian_finite(net: Network, controls, horizon, tol_ctrb: float = DEFAULT_CTRB_TOL) -> GramianReport:
    """T-step controllability Gramian sum of A^t B B' A'^t for t < T."""
    T = check_finite_horizon(horizon, "the finite-horizon Gramian")
    B = input_matrix(controls, net.n)
    W = _gramian_sum(net.A, B @ B.T, T)
    return _make_report(W, float(T), tol_ctrb)


def _ones_complement_basis(n: int) -> np.ndarray:
    M = np.column_stack([np.ones(n), np.eye(n)[:, : n - 1]])
    Q, _ = np.linalg.qr(M)
    return Q[:, 1:]


def gramian_infinite(
    net: Network,
    controls,
    deflate_consensus: bool = False,
    tol_ctrb: float = DEFAULT_CTRB_TOL,
) -> GramianReport:
    """Infinite-horizon Gramian via the discrete Lyapunov equation A W A' + B B' = W.

    Requires a Schur-stable weight matrix.  For row-stochastic consensus
    dynamics with a simple unit eigenvalue, pass ``deflate_consensus=True``:
    the dynamics are compressed onto the orthogonal complement of the
    all-ones vector (where they are stable) and the Gramian is reported in
    that reduced basis with ``deflated=True``.
    """
    B = input_matrix(controls, net.n)
    rho = _spectral_radius(net.A)
    if rho < 1.0 - STABILITY_MARGIN:
        W = _solve_lyapunov(net.A, B @ B.T)
        return _make_report(W, INFINITE, tol_ctrb)
    if not deflate_consensus:
        raise UnstableError(
            f"unstable: infinite-horizon Gramian undefined (spectral radius {rho:.12g}); "
            "for consensus dynamics pass deflate_consensus=True"
        )
    ones = np.ones(net.n)
    if np.max(np.abs(net.A @ ones - ones)) > 1e-9:
        raise UnstableError("consensus deflation requires a row-stochastic weight matrix")
    eigs = np.linalg.eigvals(net.A)
    near_unit = np.abs(eigs - 1.0) <= 1e-8
    if near_unit.sum() != 1:
        raise UnstableError("consensus deflation requires a simple unit eigenvalue")
    Q = _ones_complement_basis(net.n)
    At = Q.T @ net.A @ Q
    if _spectral_radius(At) >= 1.0 - STABILITY_MARGIN:
        raise UnstableError("deflated consensus dynamics are not Schur stable")
    Bt = Q.T @ B
    W = _solve_lyapunov(At, Bt @ Bt.T)
    return _make_report(W, INFINITE, tol_ctrb, deflated=True, basis=_freeze(Q))


def observability_gramian(net: Network, controls, horizon, tol_ctrb: float = DEFAULT_CTRB_TOL) -> GramianReport:
    """T-step observability Gramian with the sensing matrix C = B'.

    Equals the controllability Gramian of the transposed network.
    """
    T = check_horizon(horizon)
    C = input_matrix(controls, net.n).T
    if T == INFINITE:
        if _spectral_radius(net.A) >= 1.0 - STABILITY_MARGIN:
            raise UnstableError("unstable: infinite-horizon observability Gramian undefined")
        O = _solve_lyapunov(net.A.T, C.T @ C)
        return _make_report(O, INFINITE, tol_ctrb)
    O = _gramian_sum(net.A.T, C.T @ C, T)
    return _make_report(O, float(T), tol_ctrb)


def simulate(net: Network, controls, inputs, x0=None) -> Trajectory:
    """Forward recursion x(t+1) = A x(t) + B u(t) with accumulated input energy."""
    ks = check_control_set(controls, net.n)
    B = input_matrix(ks, net.n)
    U = np.asarray(inputs, dtype=float)
    if U.ndim == 1:
        U = U[:, None]
    if U.ndim != 2 or U.shape[1] != len(ks):
        raise ValueError(f"inputs must have shape (T, {len(ks)}), got {U.shape}")
    T = U.shape[0]
    x = np.zeros(net.n) if x0 is None else check_vector(x0, net.n, "x0")
    X = np.empty((T + 1, net.n))
    X[0] = x
    for t in range(T):
        X[t + 1] = net.A @ X[t] + B @ U[t]
    return Trajectory(_freeze(X), _freeze(U.copy()), float(np.sum(U * U)))


def min_energy_input(net: Network, controls, horizon, target) -> Trajectory:
    """Open-loop input driving the origin to the unit target in T steps with least energy.

    The input is B' A'^(T-t-1) W^{-1} x_f, evaluated through a Cholesky solve
    of the T-step Gramian (never an explicit inverse); its energy equals
    x_f' W^{-1} x_f.
    """
    T = check_finite_horizon(horizon, "minimum-energy synthesis")
    ks = check_control_set(controls, net.n)
    x_f = check_unit_vector(target, net.n)
    report = gramian_finite(net, ks, T)
    if not report.controllable:
        raise UncontrollableError(
            f"not controllable in {T} steps from nodes {ks.nodes}: "
            f"lambda_min(W) = {report.lambda_min:.3e} is below the relative "
            f"threshold {DEFAULT_CTRB_TOL:.1e}"
        )
    cho = scipy.linalg.cho_factor(report.matrix)
    y = scipy.linalg.cho_solve(cho, x_f)
    B = input_matrix(ks, net.n)
    U = np.empty((T, len(ks)))
    z = y.copy()
    for t in range(T - 1, -1, -1):
        U[t] = B.T @ z
        z = net.A.T @ z
    traj = simulate(net, ks, U)
    residual = float(np.linalg.norm(traj.states[-1] - x_f))
    kappa = float(report.eigenvalues[-1] / max(report.eigenvalues[0], np.finfo(float).tiny))
    if residual > 1e-8 * max(1.0, kappa * 1e-8):
        raise RuntimeError(
            f"minimum-energy endpoint residual {residual:.3e} exceeds the "
            f"conditioning-scaled tolerance (cond(W) = {kappa:.3e})"
        )
    return traj


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """One row per time step: t, x_1..x_n, u_1..u_m (u empty on the final row)."""
    n = traj.states.shape[1]
    m = traj.inputs.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(m)])
        for t in range(traj.states.shape[0]):
            row = [str(t)] + [repr(float(v)) for v in traj.states[t]]
            if t < traj.inputs.shape[0]:
                row += [repr(float(v)) for v in traj.inputs[t]]
            else:
                row += [""] * m
            writer.writerow(row)
