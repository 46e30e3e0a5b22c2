import math

import numpy as np
import pytest

from isoqsn.closed_form import (
    best_closed_form,
    conjectured_optimum,
    helstrom_two_state,
    in_orthogonal_regime,
    orthogonal_regime_state,
    symmetric_error,
    symmetric_error_inner_derivative,
    symmetric_failure_unambiguous,
    two_sensor_optimum,
    uniform_overlap_ensemble,
)
from isoqsn.discrimination import gram_matrix, min_error_discriminate
from isoqsn.errors import DomainError, RegimeError
from isoqsn.qstate import StateVector, final_states, make_unitary, same_up_to_phase
from isoqsn.symmetry import build_partition_table, set_members, threshold, threshold_T

# symmetric_error(3, 2/3) evaluated independently in exact arithmetic
N3_X23 = 0.20062943539783828


def _gram(psi, theta):
    return gram_matrix(final_states(psi, make_unitary(theta)))


def test_two_sensor_examples():
    sol = two_sensor_optimum(30)
    assert same_up_to_phase(sol.state, StateVector.from_labels((1, "+-"), (1, "-+")))
    assert sol.predicted_error == pytest.approx(0.5 * (1 - math.sin(math.radians(60))), abs=1e-15)
    assert sol.predicted_error == pytest.approx(0.0670, abs=1e-4)
    assert two_sensor_optimum(90).predicted_error == 0
    assert two_sensor_optimum(45).predicted_error == 0
    with pytest.raises(DomainError):
        two_sensor_optimum(180)


@pytest.mark.parametrize("theta", [45, 60, 90, 120, 135])
def test_two_sensor_orthogonal_band(theta):
    sol = two_sensor_optimum(theta)
    assert sol.regime == "orthogonal"
    assert abs(_gram(sol.state, theta)[0, 1]) < 1e-9


@pytest.mark.parametrize("theta", [5, 10, 20, 30, 40, 140, 170])
def test_two_sensor_formula(theta):
    sol = two_sensor_optimum(theta)
    assert sol.predicted_error == pytest.approx(0.5 * (1 - abs(math.sin(math.radians(2 * theta)))), abs=1e-14)
    assert min_error_discriminate(final_states(sol.state, make_unitary(theta))).p_error == pytest.approx(
        sol.predicted_error, abs=1e-8)


def test_orthogonal_state_n3_90():
    sol = orthogonal_regime_state(3, 90)
    w = sol.state.probabilities
    assert np.allclose(w[[0, 1, 2, 4]], 0.25) and np.allclose(w[[3, 5, 6, 7]], 0)
    g = _gram(sol.state, 90)
    assert np.max(np.abs(g - np.eye(3))) < 1e-9


def test_orthogonal_state_n3_60_is_uniform_level_one():
    sol = orthogonal_regime_state(3, 60)
    w = sol.state.probabilities
    assert w[0] == pytest.approx(0, abs=1e-15)
    assert np.allclose(w[[1, 2, 4]], 1 / 3)


def test_orthogonal_state_regime_error():
    with pytest.raises(RegimeError):
        orthogonal_regime_state(3, 30)
    with pytest.raises(RegimeError):
        orthogonal_regime_state(5, threshold_T(5) - 0.1)


@pytest.mark.parametrize("n", range(3, 9))
def test_orthogonal_state_band(n):
    t = threshold_T(n)
    for theta in np.linspace(t, 180 - t, 7):
        sol = orthogonal_regime_state(n, theta)
        g = _gram(sol.state, theta)
        assert np.max(np.abs(g - np.eye(n))) < 1e-9
        assert np.all(sol.state.amps.real >= 0)


def test_conjecture_examples():
    sol2 = conjectured_optimum(2, 30)
    assert sol2.level == 1
    assert same_up_to_phase(sol2.state, two_sensor_optimum(30).state)
    assert sol2.predicted_error == pytest.approx(two_sensor_optimum(30).predicted_error, abs=1e-15)
    sol3 = conjectured_optimum(3, 30)
    assert sol3.level == 1
    assert np.allclose(sol3.state.probabilities[[1, 2, 4]], 1 / 3)
    assert sol3.overlap == pytest.approx(2 / 3, abs=1e-15)
    assert sol3.predicted_error == pytest.approx(N3_X23, abs=1e-12)
    assert conjectured_optimum(4, 46).predicted_error == pytest.approx(0.0585, abs=1e-3)


def test_conjecture_regime_signal():
    with pytest.raises(RegimeError):
        conjectured_optimum(3, 90)
    assert conjectured_optimum(3, 150).regime == "conjectured"


@pytest.mark.parametrize("n", range(3, 7))
def test_error_zero_exactly_when_orthogonal(n):
    for theta in [1, 15, 40, threshold(n), 180 - threshold(n), 170, 90]:
        sol = best_closed_form(n, theta)
        assert (sol.predicted_error == 0) == (sol.regime == "orthogonal")


def test_symmetric_error_examples():
    for n in range(2, 7):
        assert symmetric_error(n, 0) == 0
        assert symmetric_error(n, 1) == pytest.approx(1 - 1 / n, abs=1e-15)
    assert symmetric_error(3, 2 / 3) == pytest.approx(N3_X23, abs=1e-14)
    with pytest.raises(DomainError):
        symmetric_error(3, 1.1)


@pytest.mark.parametrize("n", range(2, 7))
def test_symmetric_error_monotone(n):
    grid = np.linspace(0, 1, 21)
    values = [symmetric_error(n, x) for x in grid]
    assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))
    h = 1e-6

    def inner(x):
        return math.sqrt(1 - (n - 1) * (1 - x) / n) + (n - 1) * math.sqrt((1 - x) / n)

    for x in grid[:-1]:
        lo = max(x - h, 0.0)
        fd = (inner(x + h) - inner(lo)) / (x + h - lo)
        assert fd <= 1e-4
        if 0 < x:
            assert fd == pytest.approx(symmetric_error_inner_derivative(n, x), abs=1e-4)


def test_symmetric_failure():
    assert symmetric_failure_unambiguous(3, 0) == 0
    assert symmetric_failure_unambiguous(3, 0.4) == 0.4
    assert symmetric_failure_unambiguous(3, 1) == 1
    with pytest.raises(DomainError):
        symmetric_failure_unambiguous(3, -0.1)


def test_helstrom():
    assert helstrom_two_state(0) == 0
    assert helstrom_two_state(1) == 0.5
    assert helstrom_two_state(0.5) == pytest.approx(0.5 * (1 - math.sqrt(3) / 2), abs=1e-15)
    assert helstrom_two_state(0.5j) == helstrom_two_state(0.5)
    assert helstrom_two_state(1 + 5e-10) == 0.5
    with pytest.raises(DomainError):
        helstrom_two_state(1.01)


@pytest.mark.parametrize("n", range(2, 7))
@pytest.mark.parametrize("theta", [5, 10, 20, 30, 40, 150])
def test_gram_consistency(n, theta):
    if in_orthogonal_regime(n, theta):
        pytest.skip("orthogonal band")
    sol = conjectured_optimum(n, theta)
    g = _gram(sol.state, theta)
    off = g[~np.eye(n, dtype=bool)]
    assert np.max(np.abs(off.imag)) < 1e-9
    assert np.max(off.real) - np.min(off.real) < 1e-9
    t = build_partition_table(n)
    c = math.cos(2 * math.radians(theta))
    x_k = 1 / len(set_members(n, sol.level))
    expected = sum((t.r_counts[k] + c * t.l_counts[k]) * (x_k if k == sol.level else 0) for k in range(n + 1))
    assert off.real[0] == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("n", range(2, 6))
def test_solver_agreement(n):
    for theta in [10, 20, 30, 40, threshold(n) - 1]:
        sol = conjectured_optimum(n, theta)
        res = min_error_discriminate(final_states(sol.state, make_unitary(theta)))
        assert res.converged
        assert abs(res.p_error - sol.predicted_error) <= 1e-5


@pytest.mark.parametrize("n", range(2, 9))
def test_boundary_continuity(n):
    t = threshold(n)
    near = conjectured_optimum(n, t - 1e-7)
    assert near.overlap < 1e-6
    at = conjectured_optimum(n, t)
    ortho = orthogonal_regime_state(n, t)
    assert at.regime == "orthogonal" and at.predicted_error == 0
    assert same_up_to_phase(at.state, ortho.state, tol=1e-8)


@pytest.mark.parametrize("n", range(2, 6))
@pytest.mark.parametrize("x", [0.0, 0.1, 0.5, 0.9])
def test_uniform_overlap_ensemble(n, x):
    g = gram_matrix(uniform_overlap_ensemble(n, x))
    off = g[~np.eye(n, dtype=bool)]
    assert np.max(np.abs(off - x)) < 1e-12
