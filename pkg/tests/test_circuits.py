import itertools
import math

import numpy as np
import pytest

from ifmsim import oracle as O
from ifmsim.circuits import (
    CORRECTION_TABLE,
    NAIVE_WIRING,
    CorrectionError,
    CorrectionTable,
    GcWiring,
    bell_first_pass,
    bell_generate,
    bell_measure,
    bell_second_pass,
    candidate_wirings,
    chi_generate,
    cnot_between_electrons,
    derive_correction_table,
    gc_cnot,
    swap_via_cnot,
    verify_correction_table,
)
from ifmsim.fock import FockError, Species, dual_rail_register, load_dual_rail
from ifmsim.gates import survival_probability
from ifmsim.measurement import MeasurementError, ShotRecord, shot_rng

P, E = Species.POSITRON, Species.ELECTRON
BRANCHES = list(itertools.product((0, 1), repeat=4))
R = 1 / math.sqrt(2)


def pair(vector=None, species=(P, E)):
    s, qs = dual_rail_register(list(species))
    if vector is not None:
        load_dual_rail(s, qs, vector)
    return s, qs


# -- Bell generation -----------------------------------------------------------

def test_bell_generate_zero_zero():
    s, (p, m) = pair()
    bell_generate(s, p, m)
    assert np.allclose(O.embed(s, [p, m]).vector, [R, 0, 0, R], atol=1e-12)


def test_bell_generate_one_zero():
    s, (p, m) = pair(O.basis_state([1, 0]).vector)
    bell_generate(s, p, m)
    assert np.allclose(O.embed(s, [p, m]).vector, [R, 0, 0, -R], atol=1e-12)


def test_bell_generate_finite_keeps_half_plus_half_survival():
    s, (p, m) = pair()
    bell_generate(s, p, m, stages=10)
    assert s.kept_probability() == pytest.approx((1 + survival_probability(10)) / 2, abs=1e-12)
    assert s.kept_probability() == pytest.approx(0.8903, abs=1e-4)
    assert s.total_probability() == pytest.approx(1, abs=1e-12)


# -- Bell measurement ------------------------------------------------------------

# input (a, b, c, d) -> occupancy of A B C D E F at T1, and (sign, A B C E D F) at T2
NETWORK_T1 = {
    (0, 1, 0, 1): (0, 1, 0, 0, 0, 1),
    (0, 1, 1, 0): (0, 1, 1, 0, 0, 0),
    (1, 0, 0, 1): (1, 0, 0, 0, 1, 0),
    (1, 0, 1, 0): (1, 0, 0, 1, 0, 0),
}
NETWORK_T2 = {
    (0, 1, 0, 1): (1, (0, 1, 0, 0, 0, 1)),
    (0, 1, 1, 0): (-1, (0, 1, 0, 1, 0, 0)),
    (1, 0, 0, 1): (1, (1, 0, 0, 1, 0, 0)),
    (1, 0, 1, 0): (-1, (1, 0, 0, 0, 0, 1)),
}


def _project(state, order):
    pos = [state.position(m) for m in order]
    return {tuple(cfg[p] for p in pos): amp for cfg, amp in state.terms.items()}


@pytest.mark.parametrize("rails", list(NETWORK_T1))
def test_network_columns(rails):
    s, (p, m) = dual_rail_register([P, E], [rails[0], rails[2]])
    paths = bell_first_pass(s, p, m)
    assert _project(s, paths.t1_order) == {NETWORK_T1[rails]: 1}
    bell_second_pass(s, paths)
    sign, occ = NETWORK_T2[rails]
    assert _project(s, paths.t2_order) == {occ: sign}


@pytest.mark.parametrize("bits", list(O.BELL))
def test_bell_measure_identifies_bell_states(bits):
    s, (p, m) = pair(O.BELL[bits].vector)
    out, s = bell_measure(s, p, m, shot_rng(0))
    assert out.bits == bits
    assert out.probability == pytest.approx(1, abs=1e-12)
    assert not out.inconclusive
    assert s.modes == []


def test_bell_measure_on_product_state():
    s, (p, m) = pair()
    out, _ = bell_measure(s.copy(), p, m, force=(0, 0))
    assert out.probability == pytest.approx(0.5, abs=1e-12)
    out, _ = bell_measure(s.copy(), p, m, force=(0, 1))
    assert out.probability == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(MeasurementError):
        bell_measure(s.copy(), p, m, force=(1, 0))


def test_bell_measure_needs_rng_or_force():
    s, (p, m) = pair()
    with pytest.raises(ValueError):
        bell_measure(s, p, m)


def test_bell_measure_rejects_invalid_rails():
    s, (p, m) = pair()
    s.terms = {(1, 1, 0, 1): 1}
    with pytest.raises(FockError):
        bell_measure(s, p, m, shot_rng(0))


def test_bell_measure_records_detections():
    s, (p, m) = pair(O.BELL[(1, 0)].vector)
    rec = ShotRecord(seed=0)
    bell_measure(s, p, m, shot_rng(0), record=rec)
    assert [bit for _, bit in rec.outcomes] == [1, 0]


def test_finite_bell_measure_can_be_inconclusive():
    s, (p, m) = pair(O.BELL[(0, 0)].vector)
    outs = [bell_measure(s.copy(), p, m, shot_rng(1, k), stages=2)[0] for k in range(200)]
    assert any(o.inconclusive for o in outs)
    assert all(o.bits == (0, 0) for o in outs if not o.inconclusive)


# -- chi -----------------------------------------------------------------------

def test_chi_ideal():
    s, qs = chi_generate()
    assert len(s.terms) == 4
    assert np.allclose(O.embed(s, qs).vector, O.CHI.vector, atol=1e-12)


def test_chi_history_steps():
    history = []
    chi_generate(history=history)
    names = [n for n, _ in history]
    assert names == ["H", "IFM1", "IFM2", "HHH", "IFM3"]
    _, s = history[2]
    _, qs = chi_generate()
    # after the two IFM gates: GHZ-like (|000> - |111>)/sqrt2 on chi1..3 (up to sign), chi4 = 0
    v = O.embed(s, qs).vector
    assert np.count_nonzero(np.abs(v) > 1e-12) == 2
    assert abs(v[0]) == pytest.approx(R) and abs(v[0b1110]) == pytest.approx(R)


def test_chi_finite_kept_probability():
    s, _ = chi_generate(stages=100)
    p = survival_probability(100)
    assert s.kept_probability() == pytest.approx((p * p + 1) * (1 + p) / 4, abs=1e-12)
    assert s.kept_probability() >= 0.92
    assert s.total_probability() == pytest.approx(1, abs=1e-12)


def test_chi_species_alternate():
    s, qs = chi_generate(first=E)
    assert [s.mode(q.mode_a).species for q in qs] == [E, P, E, P]


# -- teleported CNOT -------------------------------------------------------------

@pytest.mark.parametrize("branch", BRANCHES)
def test_gc_cnot_each_branch_on_basis(branch):
    for k in range(4):
        bits = [k >> 1, k & 1]
        s, (c, t) = pair(O.basis_state(bits).vector)
        r = gc_cnot(s, c, t, force=branch)
        out = O.embed(r.state, r.qubits)
        assert O.fidelity(out, O.dense_cnot(O.basis_state(bits), 0, 1)) == pytest.approx(1, abs=1e-10)


def test_gc_cnot_random_states_sampled():
    rng = np.random.default_rng(7)
    for k in range(20):
        psi = O.random_state(2, rng)
        s, (c, t) = pair(psi.vector)
        r = gc_cnot(s, c, t, shot_rng(7, k))
        assert not r.inconclusive
        assert r.probability == pytest.approx(1 / 16, abs=1e-12)
        assert O.fidelity(O.embed(r.state, r.qubits), O.dense_cnot(psi, 0, 1)) >= 1 - 1e-10


def test_gc_cnot_electron_control():
    psi = O.random_state(2, np.random.default_rng(3))
    s, (c, t) = pair(psi.vector, species=(E, P))
    r = gc_cnot(s, c, t, shot_rng(3))
    assert O.fidelity(O.embed(r.state, r.qubits), O.dense_cnot(psi, 0, 1)) >= 1 - 1e-10


def test_gc_cnot_same_species_rejected():
    s, (c, t) = pair(species=(E, E))
    with pytest.raises(FockError):
        gc_cnot(s, c, t, shot_rng(0))


def test_gc_cnot_finite_loses_probability():
    s, (c, t) = pair()
    outcomes = [gc_cnot(s.copy(), c, t, shot_rng(5, k), stages=4) for k in range(30)]
    assert any(r.inconclusive for r in outcomes)


def test_correction_table_verifies():
    assert verify_correction_table(CORRECTION_TABLE) == []


def test_correction_table_derivation_is_reproducible():
    assert derive_correction_table() == CORRECTION_TABLE


def test_literal_pairing_yields_no_cnot():
    with pytest.raises(CorrectionError):
        derive_correction_table(wirings=[NAIVE_WIRING])


def test_corrupted_table_is_caught():
    entries = dict(CORRECTION_TABLE.entries)
    entries[(0, 1, 1, 0)] = ("I", "I")
    bad = verify_correction_table(CorrectionTable(CORRECTION_TABLE.wiring, entries))
    assert bad == [(0, 1, 1, 0)]


def test_correction_table_validation():
    with pytest.raises(FockError):
        CorrectionTable(CORRECTION_TABLE.wiring, {})
    with pytest.raises(FockError):
        GcWiring(0, 0, 1, 2)


def test_candidate_wirings_species_consistent():
    ws = candidate_wirings()
    assert ws[0] == NAIVE_WIRING
    assert CORRECTION_TABLE.wiring in ws
    for w in ws:
        assert w.control_pair % 2 != w.target_pair % 2


# -- swap and electron CNOT ------------------------------------------------------

def test_swap_moves_state_to_ancilla():
    rng = np.random.default_rng(11)
    for k in range(10):
        psi = O.random_state(1, rng)
        s, (src, anc) = dual_rail_register([E, P], names=["src", "anc"])
        load_dual_rail(s, [src, anc], O.kron(psi, O.basis_state([0])).vector)
        r = swap_via_cnot(s, src, anc, shot_rng(11, k))
        src2, anc2 = r.qubits
        out = O.embed(r.state, [anc2, src2])
        assert O.fidelity(out, O.kron(psi, O.basis_state([0]))) >= 1 - 1e-10
        assert s.mode(anc2.mode_a).species == P


def test_swap_requires_zero_ancilla():
    s, (src, anc) = dual_rail_register([E, P], [0, 1])
    with pytest.raises(FockError):
        swap_via_cnot(s, src, anc, shot_rng(0))


def test_electron_cnot_random_states():
    rng = np.random.default_rng(12)
    for k in range(10):
        psi = O.random_state(2, rng)
        s, (c, t) = pair(psi.vector, species=(E, E))
        r = cnot_between_electrons(s, c, t, shot_rng(12, k))
        assert not r.inconclusive
        assert [s.mode(q.mode_a).species for q in r.qubits] == [E, E]
        assert O.fidelity(O.embed(r.state, r.qubits), O.dense_cnot(psi, 0, 1)) >= 1 - 1e-10


def test_electron_cnot_forced_branches():
    psi = O.random_state(2, np.random.default_rng(13))
    for branches in ([(0, 0, 0, 0)] * 5, [(1, 1, 1, 1)] * 5, [(1, 0, 0, 1), (0, 1, 1, 0)] * 2 + [(1, 1, 0, 0)]):
        s, (c, t) = pair(psi.vector, species=(E, E))
        r = cnot_between_electrons(s, c, t, force=branches)
        assert O.fidelity(O.embed(r.state, r.qubits), O.dense_cnot(psi, 0, 1)) >= 1 - 1e-10


def test_electron_cnot_needs_electrons():
    s, (c, t) = pair()
    with pytest.raises(FockError):
        cnot_between_electrons(s, c, t, shot_rng(0))
