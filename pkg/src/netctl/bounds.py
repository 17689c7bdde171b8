"""Analytic upper bounds on the smallest Gramian eigenvalue and their duals.

All bounds are functions of the eigenvalue distribution and of the condition
number of the (unit-column) eigenvector matrix, so they take a
``SpectralFacts`` rather than a network.  ``radius`` always denotes a
threshold on eigenvalue moduli, constrained to ``[min_modulus, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnstableError
from .gramian import INFINITE, ControlSet
from .netmodel import SpectralFacts

#: Absolute slack used when comparing computed eigenvalues against bounds.
COMPARISON_SLACK = 1e-9

KIND_DIAGONALIZABLE = "diagonalizable"
KIND_SYM_HORIZON = "symmetric-horizon-term"
KIND_SYM_TAIL = "symmetric-tail-term"
KIND_SYM_MIN = "symmetric-min"


@dataclass(frozen=True)
class BoundReport:
    """An upper bound on lambda_min of a controllability Gramian.

    ``horizon_term``/``tail_term`` are populated by the symmetric-stable
    bound, whose value is the minimum of the two.
    """

    value: float
    radius: float
    modes_within: int
    eigenvector_cond: float
    kind: str
    horizon_term: float | None = None
    tail_term: float | None = None

    def to_dict(self) -> dict:
        out = {
            "value": self.value,
            "radius": self.radius,
            "modes_within": self.modes_within,
            "eigenvector_cond": self.eigenvector_cond,
            "kind": self.kind,
        }
        if self.horizon_term is not None:
            out["horizon_term"] = self.horizon_term
            out["tail_term"] = self.tail_term
        return out


@dataclass(frozen=True)
class CardinalityBound:
    """Lower bound on the number of control nodes needed for a given energy floor.

    ``vacuous`` flags the parameter regime where the bound degenerates to
    zero (the energy floor is unachievable there anyway, so sweeps need not
    abort).
    """

    value: float
    ratio: float
    modes_within: int
    vacuous: bool


def _num_controls(controls) -> int:
    if isinstance(controls, ControlSet):
        return len(controls)
    if isinstance(controls, (int, np.integer)):
        m = int(controls)
    else:
        m = len(ControlSet(tuple(controls)))
    if m < 1:
        raise ValueError("need at least one control node")
    return m


def count_modes_within(facts: SpectralFacts, radius: float) -> int:
    """Number of eigenvalues with modulus <= radius (plus a 1e-12 slack)."""
    return int(np.sum(np.abs(facts.eigenvalues) <= radius + 1e-12))


def _check_radius(facts: SpectralFacts, radius: float) -> float:
    radius = float(radius)
    if not facts.diagonalizable:
        raise ValueError("bound requires a diagonalizable weight matrix")
    if facts.min_modulus >= 1.0:
        raise ValueError("bound requires an eigenvalue with modulus below one")
    if radius < facts.min_modulus - 1e-12 or radius >= 1.0:
        raise ValueError(
            f"radius must lie in [{facts.min_modulus:.12g}, 1), got {radius:.12g}"
        )
    return radius


def lambda_min_upper_bound(facts: SpectralFacts, controls, radius: float) -> BoundReport:
    """Horizon-independent bound cond^2(V) * r^(2(ceil(n_r/m)-1)) / (1 - r^2).

    ``n_r`` counts the eigenvalues with modulus at most ``radius`` and ``m``
    the control nodes.  Valid for every horizon on diagonalizable networks.
    """
    radius = _check_radius(facts, radius)
    m = _num_controls(controls)
    n_r = count_modes_within(facts, radius)
    exponent = 2 * (math.ceil(n_r / m) - 1)
    value = facts.eigenvector_cond**2 * radius**exponent / (1.0 - radius**2)
    return BoundReport(
        value=float(value),
        radius=radius,
        modes_within=n_r,
        eigenvector_cond=facts.eigenvector_cond,
        kind=KIND_DIAGONALIZABLE,
    )


def symmetric_lambda_min_bound(facts: SpectralFacts, controls, horizon) -> BoundReport:
    """Two-term bound for Schur-stable symmetric networks; value is their minimum.

    The first term sums the slowest mode over the horizon,
    (1 - r_min^(2T)) / (1 - r_min^2); the second is the tail term
    r_max^(2(ceil(n/m)-1)) / (1 - r_max^2).
    """
    if not facts.symmetric:
        raise ValueError("this bound requires a symmetric weight matrix")
    if not facts.schur_stable:
        raise UnstableError("this bound requires a Schur-stable weight matrix")
    m = _num_controls(controls)
    n = facts.n
    r_min = facts.min_modulus
    r_max = facts.spectral_radius
    if horizon == INFINITE:
        horizon_term = 1.0 / (1.0 - r_min**2)
    else:
        T = int(horizon)
        if T < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        horizon_term = (1.0 - r_min ** (2 * T)) / (1.0 - r_min**2)
    tail_term = r_max ** (2 * (math.ceil(n / m) - 1)) / (1.0 - r_max**2)
    return BoundReport(
        value=float(min(horizon_term, tail_term)),
        radius=r_max,
        modes_within=n,
        eigenvector_cond=1.0,
        kind=KIND_SYM_MIN,
        horizon_term=float(horizon_term),
        tail_term=float(tail_term),
    )


def min_control_nodes(facts: SpectralFacts, energy_floor: float, radius: float) -> CardinalityBound:
    """Lower bound on |K| for lambda_min(W) >= energy_floor to be achievable.

    The bound is ratio * n_r with
    ratio = 2 log(r) / (log(eps) + log(r^2 (1 - r^2)) - 2 log cond(V)).
    When the denominator is nonnegative the bound is vacuous and reported as
    a flagged zero: in that regime no control set can reach the floor.
    """
    radius = _check_radius(facts, radius)
    if radius <= 0.0:
        raise ValueError("radius must be positive for the cardinality bound")
    if energy_floor <= 0.0:
        raise ValueError("energy_floor must be positive")
    n_r = count_modes_within(facts, radius)
    denom = (
        math.log(energy_floor)
        + math.log(radius**2 * (1.0 - radius**2))
        - 2.0 * math.log(facts.eigenvector_cond)
    )
    if denom >= 0.0:
        ratio = 0.0 if denom == 0.0 else 2.0 * math.log(radius) / denom
        return CardinalityBound(value=0.0, ratio=ratio, modes_within=n_r, vacuous=True)
    ratio = 2.0 * math.log(radius) / denom
    return CardinalityBound(value=ratio * n_r, ratio=ratio, modes_within=n_r, vacuous=False)


def tightest_upper_bound(
    facts: SpectralFacts,
    controls,
    grid_points: int = 512,
    delta: float = 1e-6,
) -> BoundReport:
    """Minimize the diagonalizable bound over a radius grid.

    The grid is a uniform mesh over [min_modulus, 1 - delta] augmented with
    the eigenvalue moduli themselves (the bound jumps exactly there).
    """
    if not facts.diagonalizable:
        raise ValueError("bound requires a diagonalizable weight matrix")
    lo = facts.min_modulus
    hi = 1.0 - delta
    if lo > hi:
        raise ValueError("no admissible radius: every eigenvalue modulus is at or above one")
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    m = _num_controls(controls)
    mods = np.sort(np.abs(facts.eigenvalues))
    grid = np.unique(
        np.concatenate([np.linspace(lo, hi, grid_points), mods[(mods >= lo) & (mods <= hi)]])
    )
    n_r = np.searchsorted(mods, grid + 1e-12, side="right")
    exponents = 2.0 * (np.ceil(n_r / m) - 1.0)
    values = facts.eigenvector_cond**2 * grid**exponents / (1.0 - grid**2)
    best = int(np.argmin(values))
    return BoundReport(
        value=float(values[best]),
        radius=float(grid[best]),
        modes_within=int(n_r[best]),
        eigenvector_cond=facts.eigenvector_cond,
        kind=KIND_DIAGONALIZABLE,
    )
