"""State vectors of an n-qubit detector network and the sensor unitary.

Basis convention: each qubit is written in the eigenbasis of the sensor
unitary with ``u-`` as ``|0>`` and ``u+`` as ``|1>``.  Sensor 0 is the most
significant bit of a basis index ``j``.  In this basis the unitary is
diagonal, so firing sensor ``i`` multiplies amplitude ``j`` by ``e^{+i theta}``
when bit ``i`` of ``j`` is set and by ``e^{-i theta}`` otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError, StateValidationError

MAX_SENSORS = 12
NORM_TOL = 1e-9
PRIOR_TOL = 1e-12


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm pure state of ``n_sensors`` qubits, stored densely."""

    n_sensors: int
    amps: np.ndarray

    def __post_init__(self):
        n = self.n_sensors
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise StateValidationError(f"n_sensors must be a positive integer, got {n!r}")
        if n > MAX_SENSORS:
            raise StateValidationError(f"n_sensors={n} exceeds the dense limit of {MAX_SENSORS}")
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape[0] != 2**n:
            raise StateValidationError(
                f"expected {2**n} amplitudes for {n} sensors, got {amps.shape[0]}"
            )
        if not np.all(np.isfinite(amps)):
            raise StateValidationError("amplitudes must be finite")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise StateValidationError(
                f"state is not normalized: squared norm {norm2:.12g} "
                f"(deficit {1.0 - norm2:+.3e}, tolerance {NORM_TOL:g})"
            )
        object.__setattr__(self, "n_sensors", int(n))
        object.__setattr__(self, "amps", _readonly(amps))

    @classmethod
    def from_amplitudes(cls, amps, normalize: bool = False) -> "StateVector":
        """Build a state, inferring the sensor count from the vector length."""
        a = np.asarray(amps, dtype=complex).reshape(-1)
        n = int(round(np.log2(max(a.shape[0], 1))))
        if a.shape[0] < 2 or 2**n != a.shape[0]:
            raise StateValidationError(f"length {a.shape[0]} is not a power of two >= 2")
        if normalize:
            norm = np.linalg.norm(a)
            if norm == 0 or not np.isfinite(norm):
                raise StateValidationError("cannot normalize a zero or non-finite vector")
            a = a / norm
        return cls(n, a)

    @classmethod
    def basis(cls, n_sensors: int, j: int) -> "StateVector":
        if not 0 <= j < 2**n_sensors:
            raise IndexError(f"basis index {j} out of range for {n_sensors} sensors")
        a = np.zeros(2**n_sensors, dtype=complex)
        a[j] = 1.0
        return cls(n_sensors, a)

    @classmethod
    def from_labels(cls, *terms: tuple[complex, str], normalize: bool = True) -> "StateVector":
        """Superpose eigen-product states given as (coefficient, label) pairs.

        Labels spell each sensor's eigenvector left to right with ``+`` for
        ``u+`` and ``-`` for ``u-``, so ``(1, "+-")`` is ``|u+ u->``.
        """
        n = len(terms[0][1])
        a = np.zeros(2**n, dtype=complex)
        for coeff, label in terms:
            if len(label) != n or set(label) - {"+", "-"}:
                raise StateValidationError(f"bad eigen-label {label!r}")
            j = int(label.replace("+", "1").replace("-", "0"), 2)
            a[j] += coeff
        if normalize:
            a = a / np.linalg.norm(a)
        return cls(n, a)

    @property
    def dim(self) -> int:
        return self.amps.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        """Coefficient-squares ``|psi_j|^2``."""
        return np.abs(self.amps) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def to_dict(self) -> dict:
        return {"n": self.n_sensors, "amps": [[float(z.real), float(z.imag)] for z in self.amps]}

    @classmethod
    def from_dict(cls, data: dict) -> "StateVector":
        try:
            n = data["n"]
            amps = [complex(re, im) for re, im in data["amps"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise StateValidationError(f"malformed state document: {exc}") from exc
        return cls(n, np.array(amps, dtype=complex))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"StateVector(n_sensors={self.n_sensors}, amps={np.array2string(self.amps, precision=4)})"


def same_up_to_phase(a: StateVector, b: StateVector, tol: float = NORM_TOL) -> bool:
    """True when the two states differ at most by a global phase."""
    if a.dim != b.dim:
        return False
    return abs(abs(np.vdot(a.amps, b.amps)) - 1.0) <= tol


@dataclass(frozen=True)
class SensorUnitary:
    """Single-qubit unitary with eigenvalues ``e^{+i theta}`` (on u+) and ``e^{-i theta}`` (on u-).

    ``theta`` is in degrees.
    """

    theta: float

    def __post_init__(self):
        t = float(self.theta)
        if not (0.0 < t < 180.0) or not np.isfinite(t):
            raise DomainError(f"theta must lie in the open interval (0, 180) degrees, got {self.theta!r}")
        object.__setattr__(self, "theta", t)

    @property
    def radians(self) -> float:
        return np.deg2rad(self.theta)

    @property
    def eigenvalues(self) -> tuple[complex, complex]:
        """``(e^{+i theta}, e^{-i theta})``, ordered ``(u+, u-)``."""
        return np.exp(1j * self.radians), np.exp(-1j * self.radians)

    def spectral_matrix(self) -> np.ndarray:
        """Diagonal form in the eigenbasis listed ``(u+, u-)``."""
        return np.diag(self.eigenvalues)

    @property
    def matrix(self) -> np.ndarray:
        """Matrix in the computational basis, where ``|0> = u-`` and ``|1> = u+``."""
        plus, minus = self.eigenvalues
        return np.diag([minus, plus])


def make_unitary(theta: float) -> SensorUnitary:
    return SensorUnitary(theta)


@lru_cache(maxsize=64)
def _phase_table(n: int, theta: float) -> np.ndarray:
    """``(2^n, n)`` array: factor picked up by amplitude ``j`` when sensor ``i`` fires."""
    j = np.arange(2**n)
    bits = (j[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    table = np.exp(1j * np.deg2rad(theta) * (2 * bits - 1))
    return _readonly(table)


def bit_table(n: int) -> np.ndarray:
    """``(2^n, n)`` 0/1 array; column ``i`` holds the bit of sensor ``i`` (MSB first)."""
    j = np.arange(2**n)
    return (j[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1


def final_state_matrix(amps: np.ndarray, n: int, theta: float) -> np.ndarray:
    """Columns are the final states for each firing sensor (no validation)."""
    return amps[:, None] * _phase_table(n, theta)


def apply_at(psi: StateVector, u: SensorUnitary, i: int) -> StateVector:
    """Apply ``u`` to sensor ``i`` and identity elsewhere."""
    n = psi.n_sensors
    if not 0 <= i < n:
        raise IndexError(f"sensor index {i} out of range for {n} sensors")
    return StateVector(n, psi.amps * _phase_table(n, u.theta)[:, i])


@dataclass(frozen=True, eq=False)
class Ensemble:
    """Pure states with prior probabilities."""

    states: tuple
    priors: np.ndarray

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ValueError("an ensemble needs at least one state")
        dim = states[0].dim
        if any(s.dim != dim for s in states):
            raise ValueError("all states in an ensemble must have the same dimension")
        priors = np.array(self.priors, dtype=float).reshape(-1)
        if priors.shape[0] != len(states):
            raise ValueError(f"{len(states)} states but {priors.shape[0]} priors")
        if np.any(priors < 0) or not np.all(np.isfinite(priors)):
            raise ValueError("priors must be finite and non-negative")
        if abs(priors.sum() - 1.0) > PRIOR_TOL:
            raise ValueError(f"priors sum to {priors.sum():.15g}, not 1")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", _readonly(priors))

    @classmethod
    def uniform(cls, states: Sequence[StateVector]) -> "Ensemble":
        states = tuple(states)
        return cls(states, np.full(len(states), 1.0 / len(states)))

    def __len__(self):
        return len(self.states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    def matrix(self) -> np.ndarray:
        """``(dim, len)`` array whose columns are the states."""
        return np.stack([s.amps for s in self.states], axis=1)


def final_states(psi: StateVector, u: SensorUnitary) -> Ensemble:
    """The ``n`` states reached when exactly one sensor fires, with uniform priors."""
    cols = final_state_matrix(psi.amps, psi.n_sensors, u.theta)
    states = tuple(StateVector(psi.n_sensors, cols[:, i]) for i in range(psi.n_sensors))
    return Ensemble.uniform(states)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """``<a|b>``, antilinear in ``a``."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return complex(np.vdot(a.amps, b.amps))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {m.shape} does not match dim {self.dim}")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-10:
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValueError("density operator does not have unit trace")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -1e-10:
            raise ValueError("density operator has a negative eigenvalue")
        object.__setattr__(self, "matrix", _readonly(m))

    @classmethod
    def from_state(cls, psi: StateVector) -> "DensityOperator":
        return cls(psi.dim, np.outer(psi.amps, psi.amps.conj()))
