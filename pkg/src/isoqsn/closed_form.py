"""Analytic initial states and closed-form discrimination errors.

Three constructions are provided:

* the two-sensor optimum, an equal superposition of ``|u+ u->`` and ``|u- u+>``
  (replaced by an orthogonalizing state once ``theta`` reaches 45 degrees);
* the orthogonal-regime state, which spreads weight over the middle symmetric
  set and the all-``u-`` index so every pair of final states is orthogonal;
* the symmetric ("conjectured") state, uniform over one symmetric set, which
  makes all pairwise overlaps equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DomainError, RegimeError
from .qstate import SensorUnitary, StateVector, final_states
from .symmetry import build_partition_table, set_members, threshold

Regime = Literal["orthogonal", "conjectured", "two_sensor"]

# Slack when deciding which side of the threshold an angle sits on.
REGIME_EPS = 1e-12


@dataclass(frozen=True)
class ClosedFormSolution:
    state: StateVector
    predicted_error: float
    regime: Regime
    level: int | None = None
    overlap: float | None = None


def _cos2(theta: float) -> float:
    SensorUnitary(theta)
    return math.cos(2.0 * math.radians(theta))


def in_orthogonal_regime(n: int, theta: float) -> bool:
    """Whether ``theta`` lies in ``[T(n), 180 - T(n)]``."""
    t = threshold(n)
    return t - REGIME_EPS <= theta <= 180.0 - t + REGIME_EPS


def symmetric_error(n: int, x: float) -> float:
    """Minimum error for ``n`` equiprobable pure states with common real overlap ``x``."""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"overlap must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0  # orthogonal states; avoids rounding residue in y * y / n
    y = math.sqrt(max(1.0 - (n - 1) * (1.0 - x) / n, 0.0)) + (n - 1) * math.sqrt((1.0 - x) / n)
    return max(1.0 - y * y / n, 0.0)


def symmetric_error_inner_derivative(n: int, x: float) -> float:
    """``d/dx`` of the bracketed success amplitude; nonpositive on ``[0, 1)``."""
    return (n - 1) / (2.0 * math.sqrt(n)) * (1.0 / math.sqrt(n * x + 1.0 - x) - 1.0 / math.sqrt(1.0 - x))


def symmetric_failure_unambiguous(n: int, x: float) -> float:
    """Optimal unambiguous failure for equal pairwise overlaps ``x``: simply ``x``."""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"overlap must lie in [0, 1], got {x}")
    return float(x)


def helstrom_two_state(overlap: complex, tol: float = 1e-9) -> float:
    """Minimum error for two equiprobable pure states with the given inner product."""
    mag = abs(complex(overlap))
    if mag > 1.0 + tol:
        raise DomainError(f"|overlap| = {mag} exceeds 1")
    mag = min(mag, 1.0)
    return 0.5 * (1.0 - math.sqrt(1.0 - mag * mag))


def _state_from_weights(n: int, weights: dict[int, float]) -> StateVector:
    amps = np.zeros(2**n, dtype=complex)
    for j, w in weights.items():
        amps[j] = math.sqrt(max(w, 0.0))
    return StateVector(n, amps / np.linalg.norm(amps))


def _orthogonal_weights(n: int, theta: float) -> tuple[int, float, float]:
    """Middle level, weight per middle-level index and weight on index 0."""
    level = n // 2
    table = build_partition_table(n)
    c = _cos2(theta)
    denom = table.set_sizes[level] - c * table.l_counts[level] - table.r_counts[level]
    per_index = 1.0 / denom
    zero_weight = max((-c * table.l_counts[level] - table.r_counts[level]) / denom, 0.0)
    return level, per_index, zero_weight


def orthogonal_regime_state(n: int, theta: float) -> ClosedFormSolution:
    """State whose final states are mutually orthogonal; needs ``theta`` in ``[T, 180-T]``.

    Works for ``n = 2`` as well, where the band is ``[45, 135]``.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    SensorUnitary(theta)
    if not in_orthogonal_regime(n, theta):
        t = threshold(n)
        raise RegimeError(
            f"theta={theta} is outside [{t:.4f}, {180 - t:.4f}]; no state gives orthogonal final states"
        )
    level, per_index, zero_weight = _orthogonal_weights(n, theta)
    weights = {j: per_index for j in set_members(n, level)}
    weights[0] = zero_weight
    return ClosedFormSolution(_state_from_weights(n, weights), 0.0, "orthogonal", level, 0.0)


def level_overlap(n: int, level: int, theta: float) -> float:
    """Common overlap of final states when the state is uniform over ``S_level``."""
    table = build_partition_table(n)
    c = _cos2(theta)
    return (table.r_counts[level] + c * table.l_counts[level]) / table.set_sizes[level]


def best_level(n: int, theta: float) -> int:
    """Symmetric set giving the smallest common overlap (first one on ties)."""
    table = build_partition_table(n)
    c = _cos2(theta)
    scores = [
        (table.r_counts[k] + c * table.l_counts[k]) / table.set_sizes[k] for k in range(n + 1)
    ]
    return int(np.argmin(np.round(scores, 14)))


def conjectured_optimum(n: int, theta: float) -> ClosedFormSolution:
    """Uniform superposition over the best symmetric set, for ``theta`` outside ``(T, 180-T)``.

    At exactly ``T`` it coincides with :func:`orthogonal_regime_state`.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    SensorUnitary(theta)
    t = threshold(n)
    if t + REGIME_EPS < theta < 180.0 - t - REGIME_EPS:
        raise RegimeError(
            f"theta={theta} lies strictly inside the orthogonal regime "
            f"[{t:.4f}, {180 - t:.4f}]; use orthogonal_regime_state"
        )
    level = best_level(n, theta)
    members = set_members(n, level)
    state = _state_from_weights(n, {j: 1.0 / len(members) for j in members})
    if in_orthogonal_regime(n, theta):
        # On the threshold itself the common overlap vanishes.
        return ClosedFormSolution(state, 0.0, "orthogonal", level, 0.0)
    x = min(max(level_overlap(n, level, theta), 0.0), 1.0)
    regime = "two_sensor" if n == 2 else "conjectured"
    return ClosedFormSolution(state, symmetric_error(n, x), regime, level, x)


def two_sensor_optimum(theta: float) -> ClosedFormSolution:
    """Best two-sensor state: error ``(1 - |sin 2 theta|) / 2`` below 45 degrees, zero inside [45, 135]."""
    SensorUnitary(theta)
    if in_orthogonal_regime(2, theta):
        return orthogonal_regime_state(2, theta)
    state = StateVector.from_labels((1.0, "+-"), (1.0, "-+"))
    overlap = abs(_cos2(theta))
    return ClosedFormSolution(state, helstrom_two_state(overlap), "two_sensor", 1, overlap)


def best_closed_form(n: int, theta: float) -> ClosedFormSolution:
    """Pick the orthogonal construction inside the band and the symmetric one outside."""
    if n == 2:
        return two_sensor_optimum(theta)
    if in_orthogonal_regime(n, theta):
        return orthogonal_regime_state(n, theta)
    return conjectured_optimum(n, theta)


def uniform_overlap_angle(n: int, x: float) -> float:
    """Angle at which the middle-level symmetric state has common overlap ``x``.

    Used to build equal-overlap ensembles of ``n`` states for any ``x`` in
    ``[0, 1]``; returns degrees in ``(0, 90]``.
    """
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"overlap must lie in [0, 1], got {x}")
    level = n // 2
    table = build_partition_table(n)
    c = (x * table.set_sizes[level] - table.r_counts[level]) / table.l_counts[level]
    if c < -1.0 - 1e-12:
        raise DomainError(f"overlap {x} is below what the middle level can reach for n={n}")
    return math.degrees(0.5 * math.acos(min(max(c, -1.0), 1.0)))


def uniform_overlap_ensemble(n: int, x: float):
    """Equiprobable final states of a symmetric probe with all pairwise overlaps ``x``.

    ``x = 0`` uses the orthogonal construction at 90 degrees.
    """
    if x == 0.0:
        return final_states(best_closed_form(n, 90.0).state, SensorUnitary(90.0))
    level = n // 2
    theta = uniform_overlap_angle(n, x)
    members = set_members(n, level)
    psi = _state_from_weights(n, {j: 1.0 / len(members) for j in members})
    return final_states(psi, SensorUnitary(theta))
