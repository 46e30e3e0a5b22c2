import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isoqsn.closed_form import orthogonal_regime_state
from isoqsn.errors import DomainError, StateValidationError
from isoqsn.qstate import (
    DensityOperator,
    Ensemble,
    StateVector,
    apply_at,
    final_states,
    inner_product,
    make_unitary,
    same_up_to_phase,
)

from conftest import random_amps

seeds = st.integers(0, 2**32 - 1)
angles = st.floats(0.5, 179.5)


def test_unitary_at_ninety_degrees():
    u = make_unitary(90)
    assert np.allclose(np.diag(u.eigenvalues), np.diag([1j, -1j]))
    assert np.allclose(u.spectral_matrix(), np.diag([1j, -1j]))
    # computational basis lists u- first
    assert np.allclose(u.matrix, np.diag([-1j, 1j]))


def test_unitary_eigenvalue_arguments():
    plus, minus = make_unitary(60).eigenvalues
    assert math.degrees(cmath.phase(plus)) == pytest.approx(60)
    assert math.degrees(cmath.phase(minus)) == pytest.approx(-60)
    assert abs(plus) == pytest.approx(1) and abs(minus) == pytest.approx(1)


@pytest.mark.parametrize("theta", [0, 180, -1, 200, float("nan")])
def test_unitary_domain(theta):
    with pytest.raises(DomainError):
        make_unitary(theta)


def test_apply_at_eigenstate_gives_phase():
    psi = StateVector.from_labels((1, "++"))
    out = apply_at(psi, make_unitary(30), 0)
    assert np.allclose(out.amps, cmath.exp(1j * math.radians(30)) * psi.amps)


def test_apply_at_superposition():
    theta = 37.0
    psi = StateVector.from_labels((1, "+-"), (1, "-+"))
    out = apply_at(psi, make_unitary(theta), 0)
    t = math.radians(theta)
    expected = StateVector.from_labels((cmath.exp(1j * t), "+-"), (cmath.exp(-1j * t), "-+"))
    assert np.allclose(out.amps, expected.amps)


def test_apply_at_index_error():
    psi = StateVector.basis(2, 0)
    with pytest.raises(IndexError):
        apply_at(psi, make_unitary(30), 2)


def test_unitarity_random_states(rng):
    for _ in range(100):
        psi = StateVector(3, random_amps(3, rng))
        theta = rng.uniform(1, 179)
        for i in range(3):
            assert abs(apply_at(psi, make_unitary(theta), i).norm() - 1) < 1e-12


@given(seeds, angles, st.integers(3, 5))
def test_actions_commute(seed, theta, n):
    rng = np.random.default_rng(seed)
    psi = StateVector(n, random_amps(n, rng))
    u = make_unitary(theta)
    for i in range(n):
        for j in range(i + 1, n):
            a = apply_at(apply_at(psi, u, i), u, j)
            b = apply_at(apply_at(psi, u, j), u, i)
            assert np.max(np.abs(a.amps - b.amps)) < 1e-12


def _expanded_overlaps(w, theta):
    e = cmath.exp(2j * math.radians(theta))
    z0 = (w[2] + w[3]) * e + (w[4] + w[5]) / e + (w[0] + w[1] + w[6] + w[7])
    z1 = (w[1] + w[5]) * e + (w[2] + w[6]) / e + (w[0] + w[3] + w[4] + w[7])
    z2 = (w[1] + w[3]) * e + (w[4] + w[6]) / e + (w[0] + w[2] + w[5] + w[7])
    return z0, z1, z2


@given(seeds, angles)
def test_spectral_overlap_identity(seed, theta):
    rng = np.random.default_rng(seed)
    psi = StateVector(3, random_amps(3, rng))
    phi = final_states(psi, make_unitary(theta)).states
    z0, z1, z2 = _expanded_overlaps(psi.probabilities, theta)
    assert abs(inner_product(phi[0], phi[1]) - z0) < 1e-10
    assert abs(inner_product(phi[1], phi[2]) - z1) < 1e-10
    assert abs(inner_product(phi[0], phi[2]) - z2) < 1e-10


def test_final_states_two_sensors(rng):
    ens = final_states(StateVector(2, random_amps(2, rng)), make_unitary(20))
    assert len(ens) == 2
    assert np.allclose(ens.priors, [0.5, 0.5])


def test_final_states_single_sensor():
    ens = final_states(StateVector.basis(1, 1), make_unitary(20))
    assert len(ens) == 1 and ens.priors[0] == 1.0


def test_final_states_orthogonal_at_ninety():
    psi = orthogonal_regime_state(3, 90).state
    phi = final_states(psi, make_unitary(90)).states
    for i in range(3):
        for j in range(i + 1, 3):
            assert abs(inner_product(phi[i], phi[j])) < 1e-12


def test_inner_product_basics(rng):
    a = StateVector(3, random_amps(3, rng))
    b = StateVector(3, random_amps(3, rng))
    assert inner_product(a, a) == pytest.approx(1)
    assert inner_product(a, b) == pytest.approx(inner_product(b, a).conjugate())
    assert inner_product(StateVector.from_labels((1, "+-")), StateVector.from_labels((1, "-+"))) == 0
    with pytest.raises(ValueError):
        inner_product(a, StateVector.basis(2, 0))


def test_uniform_state_overlap_matches_closed_expression():
    theta = 25.0
    psi = StateVector(3, np.full(8, 1 / math.sqrt(8)))
    phi = final_states(psi, make_unitary(theta)).states
    t = math.radians(theta)
    expected = 0.25 * cmath.exp(2j * t) + 0.25 * cmath.exp(-2j * t) + 0.5
    assert inner_product(phi[0], phi[1]) == pytest.approx(expected, abs=1e-12)


def test_state_validation_messages():
    with pytest.raises(StateValidationError, match="deficit"):
        StateVector(2, [1, 1, 0, 0])
    with pytest.raises(StateValidationError):
        StateVector(2, [1, 0, 0])
    with pytest.raises(StateValidationError):
        StateVector(2, [np.nan, 0, 0, 0])
    with pytest.raises(StateValidationError):
        StateVector(13, np.eye(1, 2**13)[0])


def test_state_is_immutable():
    psi = StateVector.basis(2, 1)
    with pytest.raises(ValueError):
        psi.amps[0] = 1


def test_json_round_trip(rng):
    psi = StateVector(3, random_amps(3, rng))
    back = StateVector.from_json(psi.to_json())
    assert np.array_equal(back.amps, psi.amps)
    doc = json.loads(psi.to_json())
    assert doc["n"] == 3 and len(doc["amps"]) == 8 and len(doc["amps"][0]) == 2


def test_phase_predicate(rng):
    psi = StateVector(2, random_amps(2, rng))
    rotated = StateVector(2, psi.amps * cmath.exp(0.7j))
    assert same_up_to_phase(psi, rotated)
    assert not same_up_to_phase(psi, StateVector(2, random_amps(2, rng)))


def test_ensemble_invariants():
    a, b = StateVector.basis(2, 0), StateVector.basis(2, 1)
    Ensemble((a, b), [0.25, 0.75])
    with pytest.raises(ValueError):
        Ensemble((a, b), [0.5, 0.6])
    with pytest.raises(ValueError):
        Ensemble((a, StateVector.basis(1, 0)), [0.5, 0.5])
    with pytest.raises(ValueError):
        Ensemble((a, b), [-0.5, 1.5])


def test_density_operator():
    rho = DensityOperator.from_state(StateVector.from_labels((1, "+-"), (1j, "-+")))
    assert np.trace(rho.matrix).real == pytest.approx(1)
    with pytest.raises(ValueError):
        DensityOperator(2, np.array([[1, 1], [0, 0]]))
    with pytest.raises(ValueError):
        DensityOperator(2, np.diag([1.5, -0.5]))
