"""Dense state-vector reference simulator on abstract qubits.

Qubit 0 is the most significant bit of the basis index. This module only reads
dual-rail states in ``embed``; it shares no gate code with the sparse simulator.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)

PAULI = {"I": I2, "X": X, "Z": Z}


class OracleError(ValueError):
    pass


class DenseState:
    def __init__(self, vector, n_qubits: int | None = None):
        vec = np.asarray(vector, dtype=complex).ravel().copy()
        n = int(round(np.log2(vec.size))) if n_qubits is None else n_qubits
        if vec.size != 2 ** n:
            raise OracleError(f"vector of size {vec.size} is not a {n}-qubit state")
        if abs(np.linalg.norm(vec) - 1) > 1e-12:
            raise OracleError("dense state must have unit norm")
        self.vector = vec
        self.n = n

    def __repr__(self) -> str:
        return f"DenseState(n={self.n}, {np.round(self.vector, 6)})"

    def copy(self) -> "DenseState":
        return DenseState(self.vector, self.n)


def basis_state(bits: Sequence[int]) -> DenseState:
    n = len(bits)
    vec = np.zeros(2 ** n, dtype=complex)
    vec[int("".join(map(str, bits)) or "0", 2)] = 1
    return DenseState(vec, n)


def random_state(n: int, rng: np.random.Generator) -> DenseState:
    vec = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return DenseState(vec / np.linalg.norm(vec), n)


def embed(state, qubits) -> DenseState:
    """Dense vector of a lossless dual-rail state (|0̄> -> 0, |1̄> -> 1).

    Modes outside ``qubits`` must be in the same occupancy in every term.
    """
    if state.loss_probability > 0:
        raise OracleError("cannot embed a state with loss")
    ids = state.mode_ids
    pa = [ids.index(q.mode_a) for q in qubits]
    pb = [ids.index(q.mode_b) for q in qubits]
    rails = set(pa) | set(pb)
    others = [p for p in range(len(ids)) if p not in rails]
    n = len(qubits)
    vec = np.zeros(2 ** n, dtype=complex)
    spectator = None
    for cfg, amp in state.terms.items():
        rest = tuple(cfg[p] for p in others)
        if spectator is None:
            spectator = rest
        elif rest != spectator:
            raise OracleError("modes outside the qubit list are entangled with the qubits")
        index = 0
        for a, b in zip(pa, pb):
            if cfg[a] + cfg[b] != 1:
                raise OracleError("state is not dual-rail valid")
            index = 2 * index + cfg[a]
        vec[index] += amp
    return DenseState(vec, n)


def _apply_1q(state: DenseState, gate: np.ndarray, q: int) -> DenseState:
    if not 0 <= q < state.n:
        raise OracleError(f"qubit index {q} out of range")
    t = state.vector.reshape([2] * state.n)
    t = np.moveaxis(np.tensordot(gate, t, axes=([1], [q])), 0, q)
    return DenseState(t.reshape(-1), state.n)


def dense_h(state: DenseState, q: int) -> DenseState:
    return _apply_1q(state, H, q)


def dense_x(state: DenseState, q: int) -> DenseState:
    return _apply_1q(state, X, q)


def dense_z(state: DenseState, q: int) -> DenseState:
    return _apply_1q(state, Z, q)


def dense_pauli(state: DenseState, word: str, q: int) -> DenseState:
    for letter in word:
        state = _apply_1q(state, PAULI[letter], q)
    return state


def dense_cnot(state: DenseState, control: int, target: int) -> DenseState:
    if not (0 <= control < state.n and 0 <= target < state.n) or control == target:
        raise OracleError("bad control/target indices")
    t = state.vector.reshape([2] * state.n).copy()
    sel = [slice(None)] * state.n
    sel[control] = 1
    sub = t[tuple(sel)]
    axis = target if target < control else target - 1
    t[tuple(sel)] = np.flip(sub, axis=axis)
    return DenseState(t.reshape(-1), state.n)


def dense_swap(state: DenseState, q1: int, q2: int) -> DenseState:
    t = np.swapaxes(state.vector.reshape([2] * state.n), q1, q2)
    return DenseState(t.reshape(-1), state.n)


def kron(*states: DenseState) -> DenseState:
    vec = np.ones(1, dtype=complex)
    for s in states:
        vec = np.kron(vec, s.vector)
    return DenseState(vec, sum(s.n for s in states))


def fidelity(psi: DenseState, phi: DenseState) -> float:
    if psi.vector.shape != phi.vector.shape:
        raise OracleError("dimension mismatch")
    return float(abs(np.vdot(psi.vector, phi.vector)) ** 2)


BELL = {
    (0, 0): DenseState(np.array([1, 0, 0, 1]) / np.sqrt(2)),   # Phi+
    (0, 1): DenseState(np.array([1, 0, 0, -1]) / np.sqrt(2)),  # Phi-
    (1, 0): DenseState(np.array([0, 1, 1, 0]) / np.sqrt(2)),   # Psi+
    (1, 1): DenseState(np.array([0, 1, -1, 0]) / np.sqrt(2)),  # Psi-
}

CHI = DenseState(np.array([1 if k in (0b0000, 0b1100, 0b0111, 0b1011) else 0 for k in range(16)]) / 2)


def bell_probabilities(state: DenseState, q1: int, q2: int) -> dict[tuple[int, int], float]:
    """Born probabilities of a Bell-basis measurement on two qubits of a dense state."""
    t = np.moveaxis(state.vector.reshape([2] * state.n), (q1, q2), (0, 1)).reshape(4, -1)
    return {bits: float(np.sum(np.abs(b.vector.conj() @ t) ** 2)) for bits, b in BELL.items()}
