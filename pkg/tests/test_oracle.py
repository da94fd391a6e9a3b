import math

import numpy as np
import pytest

from ifmsim import oracle as O
from ifmsim.circuits import bell_generate
from ifmsim.fock import Species, dual_rail_register, load_dual_rail


def test_basis_state_index():
    assert np.argmax(O.basis_state([1, 0]).vector) == 2


def test_unit_norm_enforced():
    with pytest.raises(O.OracleError):
        O.DenseState([1, 1])


def test_embed_basis():
    s, qs = dual_rail_register([Species.POSITRON, Species.ELECTRON])
    assert np.allclose(O.embed(s, qs).vector, [1, 0, 0, 0])


def test_embed_bell():
    s, qs = dual_rail_register([Species.POSITRON, Species.ELECTRON])
    bell_generate(s, *qs)
    assert np.allclose(O.embed(s, qs).vector, np.array([1, 0, 0, 1]) / math.sqrt(2), atol=1e-12)


def test_embed_round_trip_random():
    rng = np.random.default_rng(1)
    psi = O.random_state(3, rng)
    s, qs = dual_rail_register([Species.ELECTRON] * 3)
    load_dual_rail(s, qs, psi.vector)
    assert np.allclose(O.embed(s, qs).vector, psi.vector, atol=1e-15)


def test_embed_rejects_loss_and_invalid_rails():
    s, qs = dual_rail_register([Species.ELECTRON])
    s.loss_probability = 0.1
    with pytest.raises(O.OracleError):
        O.embed(s, qs)
    s, qs = dual_rail_register([Species.ELECTRON])
    s.terms = {(1, 1): 1}
    with pytest.raises(O.OracleError):
        O.embed(s, qs)


def test_cnot_truth_table():
    for c in (0, 1):
        for t in (0, 1):
            out = O.dense_cnot(O.basis_state([c, t]), 0, 1)
            assert out.vector[2 * c + (t ^ c)] == 1
            rev = O.dense_cnot(O.basis_state([c, t]), 1, 0)
            assert rev.vector[2 * (c ^ t) + t] == 1


def test_cnot_on_three_qubits_middle_control():
    out = O.dense_cnot(O.basis_state([0, 1, 0]), 1, 2)
    assert out.vector[0b011] == 1
    out = O.dense_cnot(O.basis_state([0, 1, 0]), 1, 0)
    assert out.vector[0b110] == 1


def test_single_qubit_gates():
    s = O.dense_h(O.basis_state([0]), 0)
    assert np.allclose(s.vector, [1 / math.sqrt(2)] * 2)
    assert np.allclose(O.dense_x(O.basis_state([0]), 0).vector, [0, 1])
    assert np.allclose(O.dense_z(O.basis_state([1]), 0).vector, [0, -1])
    assert np.allclose(O.dense_pauli(O.basis_state([0]), "XZ", 0).vector, [0, -1])


def test_swap():
    assert O.dense_swap(O.basis_state([1, 0]), 0, 1).vector[1] == 1


def test_fidelity_properties():
    rng = np.random.default_rng(2)
    a, b = O.random_state(2, rng), O.random_state(2, rng)
    assert O.fidelity(a, a) == pytest.approx(1)
    assert O.fidelity(O.basis_state([0]), O.basis_state([1])) == 0
    phased = O.DenseState(np.exp(0.7j) * b.vector)
    assert O.fidelity(a, phased) == pytest.approx(O.fidelity(a, b))
    with pytest.raises(O.OracleError):
        O.fidelity(a, O.basis_state([0]))


def test_bell_basis_orthonormal():
    m = np.array([b.vector for b in O.BELL.values()])
    assert np.allclose(m @ m.conj().T, np.eye(4))


def test_chi_vector():
    nz = np.flatnonzero(O.CHI.vector)
    assert sorted(nz) == [0b0000, 0b0111, 0b1011, 0b1100]


def test_bell_probabilities():
    assert O.bell_probabilities(O.BELL[(1, 1)], 0, 1)[(1, 1)] == pytest.approx(1)
    p = O.bell_probabilities(O.basis_state([0, 0]), 0, 1)
    assert p[(0, 0)] == pytest.approx(0.5) and p[(0, 1)] == pytest.approx(0.5)
