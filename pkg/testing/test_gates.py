import numpy as np
import pytest

from exceptions import ParameterError
from quantum.gates import build_gate
from quantum.sparse_state import SparseState


def cat(state: SparseState, k: int) -> list[int]:
    qubits = state.alloc(0, k)
    state.apply_1q(build_gate("hadamard"), qubits[0])
    for q in qubits[1:]:
        state.apply_classical([qubits[0]], [q], lambda bits: bits)
    return qubits


@pytest.mark.parametrize("k", range(2, 21))
def test_family_is_unitary(k):
    kinds = ["W_k", "U_k" if k % 2 == 0 else "V_k"]
    for kind in kinds:
        assert build_gate(kind, k=k).unitarity_error() < 1e-12


def test_v3_constants():
    gate = build_gate("V_k", k=3)
    assert np.max(np.abs(gate.matrix.conj().T @ gate.matrix - np.eye(4))) < 1e-12


def test_u_k_closed_form():
    k = 4
    expected = np.array([[1, np.exp(-1j * np.pi / k)], [-np.exp(1j * np.pi / k), 1]]) / np.sqrt(2)
    assert np.allclose(build_gate("U_k", k=k).matrix, expected)


def test_u2_and_w2_matrices():
    assert np.allclose(build_gate("U_k", k=2).matrix, np.array([[1, -1j], [-1j, 1]]) / np.sqrt(2))
    assert np.allclose(build_gate("W_k", k=2).matrix, np.array([[1, 0], [0, 1j]]))


def test_wrong_parity_is_rejected():
    with pytest.raises(ParameterError):
        build_gate("U_k", k=3)
    with pytest.raises(ParameterError):
        build_gate("V_k", k=4)
    with pytest.raises(ParameterError):
        build_gate("W_k", k=0)
    with pytest.raises(ParameterError):
        build_gate("toffoli")


@pytest.mark.parametrize("k", [2, 4, 6, 8])
@pytest.mark.parametrize("psi,t", [(None, None), (0.0, 0), (0.3, 1), (1.1, 2)])
def test_u_gate_kills_uniform_strings(k, psi, t):
    state = SparseState()
    qubits = cat(state, k)
    gate = build_gate("U_k", k=k) if psi is None else build_gate("U_k_general", k=k, psi=psi, t=t)
    for q in qubits:
        state.apply_1q(gate, q)
    assert abs(state.amplitude({q: 0 for q in qubits})) < 1e-9
    assert abs(state.amplitude({q: 1 for q in qubits})) < 1e-9
    assert abs(state.norm() - 1) < 1e-9


def test_u2_pair_support():
    state = SparseState()
    q0, q1 = cat(state, 2)
    gate = build_gate("U_k", k=2)
    state.apply_1q(gate, q0)
    state.apply_1q(gate, q1)
    support = {bits for bits, amp in state.amplitudes([q0, q1]).items() if abs(amp) > 1e-9}
    assert support == {(0, 1), (1, 0)}


@pytest.mark.parametrize("k", [3, 5, 7])
def test_v_gate_kills_uniform_pairs(k):
    state = SparseState()
    r0 = cat(state, k)
    r1 = state.alloc(0, k)
    gate = build_gate("V_k", k=k)
    for a, b in zip(r0, r1):
        state.apply_classical([a], [b], lambda bits: bits)
        state.apply_2q(gate, a, b)
    for b0 in (0, 1):
        for b1 in (0, 1):
            config = {**{q: b0 for q in r0}, **{q: b1 for q in r1}}
            assert abs(state.amplitude(config)) < 1e-9
