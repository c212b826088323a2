import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import embed_circuit, embed_gate
from dqc1otoc.qsim import (
    Circuit,
    Gate,
    StateVector,
    apply_circuit,
    apply_gate,
    circuit_unitary,
    controlled,
    expectation_pauli,
    random_circuit,
    random_unitary,
)

S2 = 1 / np.sqrt(2)


def test_hadamard_on_zero():
    out = apply_gate(StateVector.zero(1), Gate("H", (0,)))
    np.testing.assert_allclose(out.amplitudes, [S2, S2], atol=1e-15)


def test_x_on_zero():
    out = apply_gate(StateVector.zero(1), Gate("X", (0,)))
    np.testing.assert_allclose(out.amplitudes, [0, 1])


def test_cnot_control_zero_target_one():
    # |01> with qubit 0 set is basis index 1; result |11> is index 3
    out = apply_gate(StateVector.basis(2, 1), Gate("X", (1,), controls=(0,)))
    np.testing.assert_allclose(out.amplitudes, [0, 0, 0, 1])


def test_cnot_idle_when_control_off():
    out = apply_gate(StateVector.basis(2, 2), Gate("X", (1,), controls=(0,)))
    np.testing.assert_allclose(out.amplitudes, [0, 0, 1, 0])


def test_apply_gate_is_in_place():
    s = StateVector.zero(1)
    out = apply_gate(s, Gate("X", (0,)))
    assert out is s


def test_empty_circuit_is_identity(rng):
    psi = StateVector.from_amplitudes(rng.normal(size=8) + 1j * rng.normal(size=8), normalize=True)
    out = apply_circuit(psi.copy(), Circuit(3))
    np.testing.assert_array_equal(out.amplitudes, psi.amplitudes)


def test_hh_is_identity():
    out = apply_circuit(StateVector.zero(1), Circuit(1, [Gate("H", (0,)), Gate("H", (0,))]))
    np.testing.assert_allclose(out.amplitudes, [1, 0], atol=1e-12)


def test_apply_circuit_order():
    # X then H on |0> gives |->, H then X gives |+>
    c = Circuit(1, [Gate("X", (0,)), Gate("H", (0,))])
    np.testing.assert_allclose(apply_circuit(StateVector.zero(1), c).amplitudes, [S2, -S2], atol=1e-15)


@pytest.mark.parametrize("kind,theta,expected", [
    ("Z", None, np.diag([1, -1])),
    ("S", None, np.diag([1, 1j])),
    ("PHASE", 0.3, np.diag([1, np.exp(0.3j)])),
    ("RZ", 0.3, np.diag([np.exp(-0.15j), np.exp(0.15j)])),
    ("RX", 0.3, np.array([[np.cos(0.15), -1j * np.sin(0.15)], [-1j * np.sin(0.15), np.cos(0.15)]])),
    ("Y", None, np.array([[0, -1j], [1j, 0]])),
])
def test_single_qubit_matrices(kind, theta, expected):
    g = Gate(kind, (0,), theta=theta)
    np.testing.assert_allclose(circuit_unitary(Circuit(1, [g])), expected, atol=1e-15)


def test_zz_matches_cnot_rz_cnot():
    theta = 0.77
    native = circuit_unitary(Circuit(2, [Gate("ZZ", (0, 1), theta=theta)]))
    decomposed = circuit_unitary(Circuit(2, [
        Gate("X", (1,), controls=(0,)), Gate("RZ", (1,), theta=theta), Gate("X", (1,), controls=(0,))]))
    np.testing.assert_allclose(native, decomposed, atol=1e-14)


def test_dense2q_target_order(rng):
    m = random_unitary(4, rng)
    # targets (2, 0): local index = bit(q2) + 2*bit(q0)
    g = Gate("DENSE2Q", (2, 0), matrix=m)
    np.testing.assert_allclose(circuit_unitary(Circuit(3, [g])), embed_gate(g, 3), atol=1e-14)


@pytest.mark.parametrize("axis,amps,expected", [
    ("Z", [1, 0], 1.0),
    ("Z", [S2, S2], 0.0),
    ("Y", [S2, 1j * S2], 1.0),
    ("X", [S2, S2], 1.0),
    ("X", [S2, -S2], -1.0),
])
def test_expectation_pauli(axis, amps, expected):
    assert expectation_pauli(StateVector.from_amplitudes(amps), axis, 0) == pytest.approx(expected, abs=1e-12)


def test_expectation_on_higher_qubit():
    # qubit 1 is the high bit: index 2 has qubit1 = 1
    assert expectation_pauli(StateVector.basis(2, 2), "Z", 1) == pytest.approx(-1)
    assert expectation_pauli(StateVector.basis(2, 2), "Z", 0) == pytest.approx(1)


def test_controlled_empty():
    assert len(controlled(Circuit(2), 1)) == 0


def test_controlled_x():
    c = controlled(Circuit(1, [Gate("X", (0,))]), 1)
    assert c.n_qubits == 2
    out = apply_circuit(StateVector.basis(2, 2), c)
    np.testing.assert_allclose(out.amplitudes, [0, 0, 0, 1])


def test_controlled_trotter_circuit_idle_when_control_off(rng):
    from dqc1otoc.models import EvolutionSpec, build_evolution_circuit, preset

    circ = build_evolution_circuit(preset("chaotic-default", 3), EvolutionSpec(0.9, "trotter2", 4))
    c = controlled(circ, 3)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    amps = np.concatenate([psi, np.zeros(8)])
    out = apply_circuit(StateVector(4, amps.copy()), c)
    np.testing.assert_allclose(out.amplitudes, amps, atol=1e-15)
    assert len(c) == len(circ)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_controlled_block_structure(n, rng):
    circ = random_circuit(n, 30, rng)
    full = circuit_unitary(controlled(circ, n))
    u = circuit_unitary(circ)
    dim = 2 ** n
    np.testing.assert_allclose(full[:dim, :dim], np.eye(dim), atol=1e-12)
    np.testing.assert_allclose(full[dim:, dim:], u, atol=1e-12)
    np.testing.assert_allclose(full[:dim, dim:], 0, atol=1e-12)
    np.testing.assert_allclose(full[dim:, :dim], 0, atol=1e-12)


def test_controlled_collision():
    with pytest.raises(ValueError, match="control"):
        controlled(Circuit(2, [Gate("X", (1,))]), 1)
    with pytest.raises(ValueError, match="control"):
        controlled(Circuit(3, [Gate("X", (0,), controls=(2,))]), 2)


def test_errors():
    with pytest.raises(ValueError, match="out of range"):
        apply_gate(StateVector.zero(2), Gate("X", (2,)))
    with pytest.raises(ValueError, match="not unitary"):
        Gate("DENSE1Q", (0,), matrix=np.array([[1, 0], [0, 2]]))
    with pytest.raises(ValueError, match="distinct"):
        Gate("X", (0,), controls=(0,))
    with pytest.raises(ValueError, match="qubits"):
        apply_circuit(StateVector.zero(2), Circuit(3))
    with pytest.raises(ValueError, match="out of range"):
        Circuit(2, [Gate("ZZ", (0, 2), theta=0.1)])
    with pytest.raises(ValueError):
        StateVector(2, np.zeros(3))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_dense_equivalence(n, rng):
    for _ in range(4):
        circ = random_circuit(n, 40, rng)
        expected = embed_circuit(circ)
        np.testing.assert_allclose(circuit_unitary(circ), expected, atol=1e-10)
        psi = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
        psi /= np.linalg.norm(psi)
        out = apply_circuit(StateVector(n, psi.copy()), circ)
        np.testing.assert_allclose(out.amplitudes, expected @ psi, atol=1e-10)


def test_norm_preserved_over_1000_random_circuits():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        circ = random_circuit(n, int(rng.integers(0, 101)), rng)
        out = apply_circuit(StateVector.basis(n, int(rng.integers(2 ** n))), circ)
        worst = max(worst, abs(out.norm() - 1))
    assert worst < 1e-9


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 5), depth=st.integers(0, 60), seed=st.integers(0, 2 ** 32 - 1))
def test_inverse_roundtrip(n, depth, seed):
    rng = np.random.default_rng(seed)
    circ = random_circuit(n, depth, rng)
    psi = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    psi /= np.linalg.norm(psi)
    out = apply_circuit(apply_circuit(StateVector(n, psi.copy()), circ), circ.inverse())
    assert np.max(np.abs(out.amplitudes - psi)) < 1e-8


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 6), depth=st.integers(1, 80), seed=st.integers(0, 2 ** 32 - 1))
def test_single_gate_norm(n, depth, seed):
    rng = np.random.default_rng(seed)
    state = StateVector.zero(n)
    for g in random_circuit(n, depth, rng):
        before = state.norm()
        apply_gate(state, g)
        assert abs(state.norm() - before) < 1e-12
