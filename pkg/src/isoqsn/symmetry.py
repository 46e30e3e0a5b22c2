"""Symmetric sets of coefficient-squares, their overlap counts and sensor relabelling.

Coefficient ``j`` of a state belongs to the symmetric set ``S_k`` when ``k``
sensors are in ``u+`` in basis state ``|j>``, i.e. ``k = popcount(j)``.  For a
pair of firing sensors ``(i, j)`` the overlap ``<phi_i|phi_j>`` is a sum of
coefficient-squares, each either constant ("right-hand" side) or carrying a
phase ``e^{+-2i theta}`` ("left-hand" side).  ``R_k`` and ``L_k`` count the
members of ``S_k`` on each side; they do not depend on the pair chosen.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError, StateValidationError
from .qstate import StateVector, bit_table


def _check_n(n: int, minimum: int) -> None:
    if not isinstance(n, (int, np.integer)) or n < minimum:
        raise DomainError(f"n must be an integer >= {minimum}, got {n!r}")


def partition_index(j: int, n: int) -> int:
    """Number of sensors in ``u+`` for basis index ``j``."""
    if not 0 <= j < 2**n:
        raise IndexError(f"basis index {j} out of range for {n} sensors")
    return int(j).bit_count()


@lru_cache(maxsize=None)
def set_members(n: int, k: int) -> tuple[int, ...]:
    """Basis indices of ``S_k`` in ascending order."""
    return tuple(j for j in range(2**n) if j.bit_count() == k)


def popcounts(n: int) -> np.ndarray:
    return bit_table(n).sum(axis=1)


def rhs_membership(r: int, i: int, j: int, n: int) -> bool:
    """True when ``|psi_r|^2`` enters ``<phi_i|phi_j>`` without a phase.

    That happens exactly when sensors ``i`` and ``j`` (most significant first)
    carry the same bit in ``r``.
    """
    if i == j:
        raise ValueError("sensor indices must differ")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"sensor indices ({i}, {j}) out of range for {n} sensors")
    if not 0 <= r < 2**n:
        raise IndexError(f"basis index {r} out of range for {n} sensors")
    return ((r >> (n - 1 - i)) & 1) == ((r >> (n - 1 - j)) & 1)


@dataclass(frozen=True)
class PartitionTable:
    n: int
    set_sizes: tuple[int, ...]
    r_counts: tuple[int, ...]
    l_counts: tuple[int, ...]


def _comb(a: int, b: int) -> int:
    return math.comb(a, b) if 0 <= b <= a else 0


@lru_cache(maxsize=None)
def build_partition_table(n: int) -> PartitionTable:
    """Sizes of ``S_k`` and their constant/phase split, ``k = 0..n``."""
    _check_n(n, 2)
    sizes = tuple(math.comb(n, k) for k in range(n + 1))
    r = tuple(_comb(n - 2, k - 2) + _comb(n - 2, k) for k in range(n + 1))
    l = tuple(2 * _comb(n - 2, k - 1) for k in range(n + 1))
    return PartitionTable(n, sizes, r, l)


def brute_force_counts(n: int, i: int = 0, j: int = 1) -> tuple[list[int], list[int]]:
    """``(R, L)`` by direct enumeration of ``rhs_membership`` for the pair ``(i, j)``."""
    r = [0] * (n + 1)
    l = [0] * (n + 1)
    for idx in range(2**n):
        k = idx.bit_count()
        if rhs_membership(idx, i, j, n):
            r[k] += 1
        else:
            l[k] += 1
    return r, l


def threshold_T(n: int) -> float:
    """Smallest angle (degrees) admitting mutually orthogonal final states."""
    _check_n(n, 3)
    c = math.ceil(n / 2)
    return math.degrees(0.5 * math.acos(-(c - 1) / c))


def threshold(n: int) -> float:
    """Like :func:`threshold_T` but also covers two sensors, where it is 45 degrees."""
    _check_n(n, 2)
    return 45.0 if n == 2 else threshold_T(n)


def min_ratio(n: int) -> tuple[Fraction, int]:
    """Smallest ``R_k / L_k`` over ``1 <= k <= n-1`` and the first ``k`` attaining it."""
    _check_n(n, 3)
    table = build_partition_table(n)
    best = None
    best_k = -1
    for k in range(1, n):
        ratio = Fraction(table.r_counts[k], table.l_counts[k])
        if best is None or ratio < best:
            best, best_k = ratio, k
    return best, best_k


def symmetry_index(psi: StateVector) -> float:
    """Sum over unordered pairs within each ``S_k`` of squared differences of ``|psi_j|^2``.

    Uses ``sum_{i<j} (a_i - a_j)^2 = m * sum a^2 - (sum a)^2`` per set.
    """
    return symmetry_index_of_weights(psi.probabilities, psi.n_sensors)


def symmetry_index_of_weights(weights: np.ndarray, n: int) -> float:
    k = popcounts(n)
    size = np.bincount(k, minlength=n + 1)
    s1 = np.bincount(k, weights=weights, minlength=n + 1)
    s2 = np.bincount(k, weights=weights**2, minlength=n + 1)
    return float(max(np.sum(size * s2 - s1**2), 0.0))


@dataclass(frozen=True)
class SensorPermutation:
    """Relabelling of sensors: sensor ``s`` takes the role of sensor ``pi[s]``."""

    n: int
    pi: tuple[int, ...]

    def __post_init__(self):
        pi = tuple(int(p) for p in self.pi)
        if len(pi) != self.n or sorted(pi) != list(range(self.n)):
            raise ValueError(f"{self.pi!r} is not a permutation of 0..{self.n - 1}")
        object.__setattr__(self, "pi", pi)

    @classmethod
    def identity(cls, n: int) -> "SensorPermutation":
        return cls(n, tuple(range(n)))

    @classmethod
    def swap(cls, n: int, a: int, b: int) -> "SensorPermutation":
        pi = list(range(n))
        pi[a], pi[b] = pi[b], pi[a]
        return cls(n, tuple(pi))

    @classmethod
    def all(cls, n: int):
        for p in itertools.permutations(range(n)):
            yield cls(n, p)

    def index_map(self) -> np.ndarray:
        """``m[j]``: the basis index whose bit ``pi[s]`` equals bit ``s`` of ``j``."""
        bits = bit_table(self.n)
        shifts = self.n - 1 - np.asarray(self.pi)
        return (bits << shifts[None, :]).sum(axis=1)


def permute_state(psi: StateVector, perm: SensorPermutation) -> StateVector:
    """Renumber sensors: ``psi'_j = psi_{m(j)}`` with bit positions moved by ``perm``."""
    if perm.n != psi.n_sensors:
        raise ValueError(f"permutation on {perm.n} sensors applied to a {psi.n_sensors}-sensor state")
    return StateVector(psi.n_sensors, psi.amps[perm.index_map()])


def average_state(a: StateVector, b: StateVector) -> StateVector:
    """State with real non-negative coefficients ``sqrt((|a_j|^2 + |b_j|^2) / 2)``."""
    if a.dim != b.dim:
        raise StateValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    mags = np.sqrt(0.5 * (a.probabilities + b.probabilities))
    return StateVector(a.n_sensors, mags / np.linalg.norm(mags))
