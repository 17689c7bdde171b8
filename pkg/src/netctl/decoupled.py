"""Cluster-level control synthesis with certified energy bounds.

Given a partition whose boundary nodes are all controlled, each cluster can
cancel its incoming coupling exactly and steer itself with a local
minimum-energy signal.  The certificate matrices collect per-cluster worst
case energies and pairwise coupling gains; their combination bounds the
realized input energy and, reciprocally, the smallest eigenvalue of the
whole-network Gramian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._validation import check_finite_horizon, check_horizon, check_unit_vector
from .errors import DecouplingError, PartitionError, UncontrollableError, UnstableError
from .gramian import (
    INFINITE,
    ControlSet,
    Trajectory,
    _gramian_sum,
    _solve_lyapunov,
    check_control_set,
)
from .netmodel import STABILITY_MARGIN, Network
from .partition import Partition, make_partition

#: Horizon-search cap for automatic horizon selection.
MAX_AUTO_HORIZON = 2**16

#: Positive-definiteness threshold for cluster Gramians in the auto search.
DEFAULT_PD_TOL = 1e-10

_CIRCLE_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class GainMatrices:
    """Certificate matrices for a partitioned network.

    ``local_energy`` is diagonal with entries 1/lambda_min of the per-cluster
    Gramians; ``coupling_gains`` has unit diagonal and the pairwise
    input-to-coupling L2 gains off it; ``interconnection`` has unit diagonal
    and the spectral norms of the coupling blocks.  ``max_cluster_radius`` is
    the largest cluster spectral radius.
    """

    local_energy: np.ndarray
    coupling_gains: np.ndarray
    interconnection: np.ndarray
    max_cluster_radius: float

    def to_dict(self) -> dict:
        return {
            "local_energy": self.local_energy.tolist(),
            "coupling_gains": self.coupling_gains.tolist(),
            "interconnection": self.interconnection.tolist(),
            "max_cluster_radius": self.max_cluster_radius,
        }


@dataclass(frozen=True, eq=False)
class ControlPlan:
    """Per-cluster open-loop signals plus the certificate that prices them.

    ``open_loop[i]`` has shape (T, |K_i|); the cancellation terms are formed
    online from neighbour states during simulation.  ``energy_bound`` is the
    certified ceiling on the realized input energy for the unit target.
    """

    partition: Partition
    control_set: ControlSet
    horizon: int
    target: np.ndarray
    open_loop: tuple
    certificate: GainMatrices
    energy_bound: float

    def to_dict(self) -> dict:
        return {
            "partition": self.partition.to_dict(),
            "control_nodes": [k + 1 for k in self.control_set.nodes],
            "horizon": self.horizon,
            "target": self.target.tolist(),
            "open_loop": [sig.tolist() for sig in self.open_loop],
            "certificate": self.certificate.to_dict(),
            "energy_bound": self.energy_bound,
        }


def _as_partition(net: Network, partition) -> Partition:
    if isinstance(partition, Partition):
        return partition
    return make_partition(net, partition)


def _cluster_pieces(net: Network, part: Partition, controls: ControlSet):
    """Local weight blocks, local control indices, and local input matrices."""
    selected = set(controls.nodes)
    blocks = part.blocks
    A_blocks = [net.A[np.ix_(blk, blk)] for blk in blocks]
    local_controls = [[idx for idx, node in enumerate(blk) if node in selected] for blk in blocks]
    B_blocks = []
    for blk, loc in zip(blocks, local_controls):
        B = np.zeros((len(blk), len(loc)))
        if loc:
            B[loc, np.arange(len(loc))] = 1.0
        B_blocks.append(B)
    return A_blocks, B_blocks, local_controls


def _check_boundary_covered(part: Partition, controls: ControlSet) -> None:
    selected = set(controls.nodes)
    for idx, psi in enumerate(part.boundary):
        missing = sorted(set(psi) - selected)
        if missing:
            raise PartitionError(
                f"cluster {idx} has uncontrolled boundary nodes {[i + 1 for i in missing]}; "
                "coupling cancellation needs every boundary node in the control set"
            )


def _cluster_radius(A_blk: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(A_blk))))


def _cluster_gramian(A_blk, B_blk, horizon) -> np.ndarray:
    if horizon == INFINITE:
        return _solve_lyapunov(A_blk, B_blk @ B_blk.T)
    return _gramian_sum(A_blk, B_blk @ B_blk.T, int(horizon))


def local_energy_matrix(net: Network, partition, controls, horizon) -> np.ndarray:
    """Diagonal matrix of inverse per-cluster Gramian lambda_min values.

    Every cluster must be Schur stable and controllable from its selected
    nodes at the given horizon.
    """
    part = _as_partition(net, partition)
    ks = check_control_set(controls, net.n)
    horizon = check_horizon(horizon)
    A_blocks, B_blocks, local_controls = _cluster_pieces(net, part, ks)
    lam = np.empty(len(part))
    for i, (A_blk, B_blk, loc) in enumerate(zip(A_blocks, B_blocks, local_controls)):
        radius = _cluster_radius(A_blk)
        if radius >= 1.0 - STABILITY_MARGIN:
            raise UnstableError(f"cluster {i} is not Schur stable (spectral radius {radius:.6g})")
        if not loc:
            raise UncontrollableError(f"cluster {i} has no control nodes")
        W = _cluster_gramian(A_blk, B_blk, horizon)
        evals = np.linalg.eigvalsh(0.5 * (W + W.T))
        if evals[0] <= DEFAULT_PD_TOL * max(1.0, evals[-1]):
            raise UncontrollableError(
                f"cluster {i} is not controllable at horizon {horizon} from its "
                f"selected nodes (lambda_min = {evals[0]:.3e})"
            )
        lam[i] = evals[0]
    return np.diag(1.0 / lam)


def _certified_peak_upper_bound(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> float:
    """Upper bound on the peak frequency response.

    Impulse-response mass when matrix powers decay quickly (exact for
    positive scalar channels); otherwise twice the Hankel singular value sum,
    which only needs two Lyapunov solves.
    """
    if B.shape[1] == 0 or C.shape[0] == 0:
        return 0.0
    # Find t0 with ||A^t0|| <= 1/2 by repeated squaring; cap the block length
    # so the summation below stays tractable.
    P = A.copy()
    t0 = 1
    while np.linalg.norm(P, 2) > 0.5 and t0 < 2**12:
        P = P @ P
        t0 *= 2
    q = float(np.linalg.norm(P, 2))
    if q > 0.5:
        ctrb = _solve_lyapunov(A, B @ B.T)
        obsv = _solve_lyapunov(A.T, C.T @ C)
        hankel_sq = np.clip(np.linalg.eigvals(ctrb @ obsv).real, 0.0, None)
        return float(2.0 * np.sum(np.sqrt(hankel_sq)))
    total = 0.0
    M = B.copy()
    for _ in range(t0):
        total += float(np.linalg.norm(C @ M, 2))
        M = A @ M
    return total / (1.0 - q)


def _grid_peak(A, B, C, angles) -> float:
    n = A.shape[0]
    eye = np.eye(n)
    peak = 0.0
    for start in range(0, len(angles), 4096):
        z = np.exp(1j * angles[start : start + 4096])
        lhs = z[:, None, None] * eye[None] - A[None]
        X = np.linalg.solve(lhs, np.broadcast_to(B.astype(complex), (len(z),) + B.shape))
        resp = C[None] @ X
        smax = np.linalg.svd(resp, compute_uv=False)[:, 0]
        peak = max(peak, float(smax.max()))
    return peak


def _has_unit_circle_crossing(A, B, C, gamma):
    """Generalized eigenvalues of the level-set pencil that land on the unit circle.

    gamma is a singular value of the frequency response at angle theta exactly
    when exp(i theta) solves the pencil; a crossing therefore certifies
    gamma <= sup-gain.
    """
    n = A.shape[0]
    M = np.zeros((2 * n, 2 * n))
    N = np.zeros((2 * n, 2 * n))
    M[:n, :n] = A
    M[:n, n:] = (B @ B.T) / gamma
    M[n:, n:] = np.eye(n)
    N[:n, :n] = np.eye(n)
    N[n:, :n] = (C.T @ C) / gamma
    N[n:, n:] = A.T
    eigs = scipy.linalg.eig(M, N, right=False)
    eigs = eigs[np.isfinite(eigs)]
    on_circle = np.abs(np.abs(eigs) - 1.0) <= _CIRCLE_TOL
    return eigs[on_circle]


def hinf_gain(A, B, C, tol: float = 1e-6) -> float:
    """Peak gain over the unit circle of C (zI - A)^{-1} B for Schur-stable A.

    A 1024-point frequency grid seeds the lower bound and an impulse-response
    (or Hankel) sum certifies the upper bound; bisection with a spectral
    level-set test then closes the bracket to relative tolerance ``tol``.
    The returned value is the certified upper end of the bracket.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if C.ndim == 1:
        C = C[None, :]
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or C.shape[1] != n:
        raise ValueError(f"incompatible shapes A{A.shape}, B{B.shape}, C{C.shape}")
    if B.shape[1] == 0 or C.shape[0] == 0:
        return 0.0
    radius = float(np.max(np.abs(np.linalg.eigvals(A)))) if n else 0.0
    if radius >= 1.0 - STABILITY_MARGIN:
        raise UnstableError(f"peak gain requires Schur stability (spectral radius {radius:.6g})")
    ub = _certified_peak_upper_bound(A, B, C)
    if ub == 0.0:
        return 0.0
    angles = np.linspace(0.0, 2.0 * np.pi, 1024, endpoint=False)
    lb = _grid_peak(A, B, C, angles)
    ub = max(ub, lb)
    while ub - lb > tol * max(lb, 1e-300):
        gamma = 0.5 * (lb + ub)
        crossings = _has_unit_circle_crossing(A, B, C, gamma)
        if crossings.size:
            theta = np.angle(crossings)
            attained = _grid_peak(A, B, C, theta)
            lb = max(lb, gamma, attained)
        else:
            ub = gamma
    return float(ub)


def interconnection_matrix(net: Network, partition) -> np.ndarray:
    """Spectral norms of the off-diagonal coupling blocks, unit diagonal."""
    part = _as_partition(net, partition)
    N = len(part)
    delta = np.eye(N)
    for i, bi in enumerate(part.blocks):
        for j, bj in enumerate(part.blocks):
            if i == j:
                continue
            blk = net.A[np.ix_(bi, bj)]
            if np.any(blk != 0):
                delta[i, j] = float(np.linalg.norm(blk, 2))
    return delta


def l2_gains_matrix(net: Network, partition, controls, tol: float = 1e-6) -> np.ndarray:
    """Pairwise coupling gains: entry (i, j) is the peak gain of the channel
    driving cluster j's inputs and reading the coupling felt by cluster i's
    controlled rows.  Zero where clusters are not coupled; unit diagonal.
    """
    part = _as_partition(net, partition)
    ks = check_control_set(controls, net.n)
    _check_boundary_covered(part, ks)
    A_blocks, B_blocks, _ = _cluster_pieces(net, part, ks)
    for j, A_blk in enumerate(A_blocks):
        radius = _cluster_radius(A_blk)
        if radius >= 1.0 - STABILITY_MARGIN:
            raise UnstableError(f"cluster {j} is not Schur stable (spectral radius {radius:.6g})")
    N = len(part)
    gains = np.eye(N)
    for i, bi in enumerate(part.blocks):
        for j, bj in enumerate(part.blocks):
            if i == j:
                continue
            A_ij = net.A[np.ix_(bi, bj)]
            if not np.any(A_ij != 0):
                continue
            C = B_blocks[i].T @ A_ij
            gains[i, j] = hinf_gain(A_blocks[j], B_blocks[j], C, tol)
    return gains


def gain_matrices(net: Network, partition, controls, horizon, tol: float = 1e-6) -> GainMatrices:
    """Bundle the three certificate matrices for a partitioned network."""
    part = _as_partition(net, partition)
    ks = check_control_set(controls, net.n)
    local = local_energy_matrix(net, part, ks, horizon)
    gains = l2_gains_matrix(net, part, ks, tol)
    delta = interconnection_matrix(net, part)
    radius = max(_cluster_radius(net.A[np.ix_(blk, blk)]) for blk in part.blocks)
    return GainMatrices(
        local_energy=local,
        coupling_gains=gains,
        interconnection=delta,
        max_cluster_radius=float(radius),
    )


def decoupled_energy_bound(gains: GainMatrices) -> float:
    """Squared spectral norm of coupling_gains @ sqrt(local_energy)."""
    scaled = gains.coupling_gains @ np.diag(np.sqrt(np.diag(gains.local_energy)))
    return float(np.linalg.norm(scaled, 2) ** 2)


def partition_energy_bound(gains: GainMatrices) -> float:
    """Coarser certificate using only block norms:
    max local energy times the 1- and inf-norms of the interconnection matrix,
    over (1 - max cluster radius)^2.
    """
    r = gains.max_cluster_radius
    if r >= 1.0:
        raise UnstableError(f"bound undefined: max cluster spectral radius {r:.6g} >= 1")
    lam_inf = float(np.max(np.diag(gains.local_energy)))
    d1 = float(np.max(np.abs(gains.interconnection).sum(axis=0)))
    dinf = float(np.max(np.abs(gains.interconnection).sum(axis=1)))
    return lam_inf * d1 * dinf / (1.0 - r) ** 2


def auto_horizon(net: Network, partition, controls, pd_tol: float = DEFAULT_PD_TOL) -> int:
    """Smallest power-of-two multiple of the largest cluster size making every
    cluster Gramian positive definite.  Raises once the search passes 2^16.
    """
    part = _as_partition(net, partition)
    ks = check_control_set(controls, net.n)
    A_blocks, B_blocks, _ = _cluster_pieces(net, part, ks)
    T = max(len(blk) for blk in part.blocks)
    while T <= MAX_AUTO_HORIZON:
        ok = True
        for A_blk, B_blk in zip(A_blocks, B_blocks):
            if B_blk.shape[1] == 0:
                ok = False
                break
            W = _cluster_gramian(A_blk, B_blk, T)
            evals = np.linalg.eigvalsh(0.5 * (W + W.T))
            if evals[0] <= pd_tol * max(1.0, evals[-1]):
                ok = False
                break
        if ok:
            return T
        T *= 2
    raise UncontrollableError(
        f"no horizon up to {MAX_AUTO_HORIZON} makes every cluster Gramian positive "
        "definite; some cluster is uncontrollable from its selected nodes"
    )


def synthesize_decoupled(
    net: Network,
    partition,
    controls,
    target,
    horizon=None,
    gain_tol: float = 1e-6,
    pd_tol: float = DEFAULT_PD_TOL,
) -> ControlPlan:
    """Build the per-cluster open-loop signals and the energy certificate.

    Every boundary node must be controlled (that makes the coupling
    cancellation exact), every cluster Schur stable and controllable from its
    selected nodes.  The target must be unit norm; energies scale
    quadratically if callers rescale.  ``horizon=None`` picks the automatic
    power-of-two policy.
    """
    part = _as_partition(net, partition)
    ks = check_control_set(controls, net.n)
    x_f = check_unit_vector(target, net.n)
    _check_boundary_covered(part, ks)
    A_blocks, B_blocks, _ = _cluster_pieces(net, part, ks)
    # Exact cancellation: selecting the controlled rows must reproduce every
    # coupling block.
    for i, bi in enumerate(part.blocks):
        for j, bj in enumerate(part.blocks):
            if i == j:
                continue
            A_ij = net.A[np.ix_(bi, bj)]
            proj = B_blocks[i] @ (B_blocks[i].T @ A_ij)
            if not np.array_equal(proj, A_ij):
                raise PartitionError(
                    f"coupling from cluster {j} into cluster {i} touches uncontrolled rows"
                )
    if horizon is None:
        T = auto_horizon(net, part, ks, pd_tol)
    else:
        T = check_finite_horizon(horizon, "decoupled synthesis")
    lam = np.empty(len(part))
    signals = []
    for i, (blk, A_blk, B_blk) in enumerate(zip(part.blocks, A_blocks, B_blocks)):
        radius = _cluster_radius(A_blk)
        if radius >= 1.0 - STABILITY_MARGIN:
            raise UnstableError(f"cluster {i} is not Schur stable (spectral radius {radius:.6g})")
        if B_blk.shape[1] == 0:
            raise UncontrollableError(f"cluster {i} has no control nodes")
        W = _cluster_gramian(A_blk, B_blk, T)
        W = 0.5 * (W + W.T)
        evals = np.linalg.eigvalsh(W)
        if evals[0] <= pd_tol * max(1.0, evals[-1]):
            raise UncontrollableError(
                f"cluster {i} is not controllable at horizon {T} from its selected "
                f"nodes (lambda_min = {evals[0]:.3e})"
            )
        lam[i] = evals[0]
        cho = scipy.linalg.cho_factor(W)
        y = scipy.linalg.cho_solve(cho, x_f[list(blk)])
        U = np.empty((T, B_blk.shape[1]))
        z = y.copy()
        for t in range(T - 1, -1, -1):
            U[t] = B_blk.T @ z
            z = A_blk.T @ z
        U.flags.writeable = False
        signals.append(U)
    certificate = GainMatrices(
        local_energy=np.diag(1.0 / lam),
        coupling_gains=l2_gains_matrix(net, part, ks, gain_tol),
        interconnection=interconnection_matrix(net, part),
        max_cluster_radius=float(max(_cluster_radius(blk) for blk in A_blocks)),
    )
    x_f = x_f.copy()
    x_f.flags.writeable = False
    return ControlPlan(
        partition=part,
        control_set=ks,
        horizon=T,
        target=x_f,
        open_loop=tuple(signals),
        certificate=certificate,
        energy_bound=decoupled_energy_bound(certificate),
    )


def simulate_decoupled(net: Network, plan: ControlPlan):
    """Run the coupled network under the decoupled law and each cluster in isolation.

    The applied input per cluster is the open-loop signal minus the live
    coupling felt through its controlled rows.  Verifies that the coupled
    trajectory reaches the target (1e-8) and agrees with the isolated cluster
    trajectories (1e-9 relative to the largest state norm); violations raise
    with the worst residual.

    Returns the coupled trajectory and the per-cluster isolated trajectories.
    """
    part = plan.partition
    ks = plan.control_set
    T = plan.horizon
    A_blocks, B_blocks, _ = _cluster_pieces(net, part, ks)
    blocks = part.blocks
    n = net.n
    m = len(ks)
    # Column of each control node in the stacked input, block by block.
    col_of = {node: idx for idx, node in enumerate(ks.nodes)}
    X = np.empty((T + 1, n))
    X[0] = 0.0
    U = np.empty((T, m))
    Z = [np.zeros((T + 1, len(blk))) for blk in blocks]
    neighbours = [
        [j for j in range(len(blocks)) if j != i and np.any(net.A[np.ix_(blocks[i], blocks[j])] != 0)]
        for i in range(len(blocks))
    ]
    coupling = {
        (i, j): net.A[np.ix_(blocks[i], blocks[j])] for i in range(len(blocks)) for j in neighbours[i]
    }
    for t in range(T):
        x_new = np.empty(n)
        for i, blk in enumerate(blocks):
            x_i = X[t, list(blk)]
            drive = A_blocks[i] @ x_i
            u_i = plan.open_loop[i][t].copy()
            for j in neighbours[i]:
                x_j = X[t, list(blocks[j])]
                drive += coupling[(i, j)] @ x_j
                u_i -= B_blocks[i].T @ (coupling[(i, j)] @ x_j)
            x_new[list(blk)] = drive + B_blocks[i] @ u_i
            for local, node in enumerate(k for k in blk if k in col_of):
                U[t, col_of[node]] = u_i[local]
            Z[i][t + 1] = A_blocks[i] @ Z[i][t] + B_blocks[i] @ plan.open_loop[i][t]
        X[t + 1] = x_new
    endpoint = float(np.linalg.norm(X[-1] - plan.target))
    if endpoint > 1e-8:
        raise DecouplingError(f"coupled endpoint misses the target by {endpoint:.3e}")
    scale = max(1.0, float(np.max(np.abs(X))))
    worst = 0.0
    for i, blk in enumerate(blocks):
        worst = max(worst, float(np.max(np.abs(X[:, list(blk)] - Z[i]))))
    if worst > 1e-9 * scale:
        raise DecouplingError(
            f"coupled and isolated cluster trajectories diverge by {worst:.3e} "
            f"(allowed {1e-9 * scale:.3e})"
        )
    coupled = Trajectory(X, U, float(np.sum(U * U)))
    locals_ = [
        Trajectory(Z[i], np.asarray(plan.open_loop[i]), float(np.sum(plan.open_loop[i] ** 2)))
        for i in range(len(blocks))
    ]
    return coupled, locals_
