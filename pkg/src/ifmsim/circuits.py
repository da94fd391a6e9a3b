"""Composite IFM circuits on electron/positron dual-rail qubits.

Bell-state generation, the Bell-basis measurement network, preparation of the
four-qubit resource state chi, the gate-teleportation CNOT and the
electron/positron swap built from two of them.

Every function takes ``stages``: ``None`` for ideal IFM gates, or the number of
beam splitters per gate for the lossy finite version.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import oracle
from .fock import (
    DualRailQubit,
    FockError,
    Mode,
    QuantumState,
    Species,
    add_modes,
    dual_rail_modes,
    dual_rail_register,
    drop_modes,
    qubit_species,
    reorder_modes,
    require_dual_rail,
)
from .gates import IfmGateSpec, apply_pauli_string, hadamard, hadamard_bs, ifm, ifm_on_qubits
from .measurement import MeasurementError, ShotRecord, born_probabilities, postselect, sample_survival

log = logging.getLogger(__name__)

BellBits = tuple[int, int]
Branch = tuple[int, int, int, int]

BELL_NAMES = {(0, 0): "Phi+", (0, 1): "Phi-", (1, 0): "Psi+", (1, 1): "Psi-"}
PAULI_WORDS = ("I", "X", "Z", "XZ")

_fresh = itertools.count()


def _fresh_name(prefix: str) -> str:
    return f"{prefix}{next(_fresh)}"


def opposite(species: Species) -> Species:
    if species == Species.ELECTRON:
        return Species.POSITRON
    if species == Species.POSITRON:
        return Species.ELECTRON
    raise FockError(f"{species.value} has no antiparticle in this model")


# -- Bell states -----------------------------------------------------------------

def bell_generate(state: QuantumState, qubit_plus: DualRailQubit, qubit_minus: DualRailQubit,
                  stages: int | None = None) -> QuantumState:
    """|0̄>|0̄> -> (|0̄0̄> + |1̄1̄>)/sqrt(2): beam splitter on the positron, then IFM."""
    hadamard(state, qubit_plus)
    return ifm_on_qubits(state, qubit_plus, qubit_minus, stages)


@dataclass(frozen=True)
class BellOutcome:
    x_bit: int = 0
    z_bit: int = 0
    inconclusive: bool = False
    probability: float = 1.0

    @property
    def bits(self) -> BellBits:
        return (self.x_bit, self.z_bit)

    @property
    def name(self) -> str:
        return "inconclusive" if self.inconclusive else BELL_NAMES[self.bits]


@dataclass(frozen=True)
class BellPaths:
    """Mode ids of the six paths in the measurement network.

    A, B continue the positron rails; D, E continue the electron rails
    (|1̄> and |0̄>), C and F are the extra output paths.
    """

    A: str
    B: str
    C: str
    D: str
    E: str
    F: str

    @property
    def t1_order(self) -> tuple[str, ...]:
        return (self.A, self.B, self.C, self.D, self.E, self.F)

    @property
    def t2_order(self) -> tuple[str, ...]:
        return (self.A, self.B, self.C, self.E, self.D, self.F)


def bell_first_pass(state: QuantumState, plus: DualRailQubit, minus: DualRailQubit,
                    stages: int | None = None) -> BellPaths:
    """Fan the electron over paths C, D, E, F according to where the positron is."""
    require_dual_rail(state, [plus, minus])
    species = qubit_species(state, minus)
    tag = _fresh_name("bm")
    c_mode = Mode(f"{tag}.C", species, "C")
    f_mode = Mode(f"{tag}.F", species, "F")
    add_modes(state, [c_mode, f_mode])
    paths = BellPaths(plus.mode_a, plus.mode_b, c_mode.id, minus.mode_a, minus.mode_b, f_mode.id)
    ids = state.mode_ids
    rest = [m for m in ids if m not in paths.t1_order]
    reorder_modes(state, rest + list(paths.t1_order))
    ifm(state, IfmGateSpec(paths.A, paths.F, paths.E, stages))
    ifm(state, IfmGateSpec(paths.A, paths.C, paths.D, stages))
    return paths


def bell_second_pass(state: QuantumState, paths: BellPaths, stages: int | None = None) -> QuantumState:
    """Cross paths D and E, then recombine (C, E) against A and (D, F) against B."""
    ids = state.mode_ids
    i, j = ids.index(paths.D), ids.index(paths.E)
    ids[i], ids[j] = ids[j], ids[i]
    reorder_modes(state, ids)
    ifm(state, IfmGateSpec(paths.A, paths.C, paths.E, stages))
    ifm(state, IfmGateSpec(paths.B, paths.D, paths.F, stages))
    return state


def bell_measure(state: QuantumState, qubit_plus: DualRailQubit, qubit_minus: DualRailQubit,
                 rng: np.random.Generator | None = None, stages: int | None = None,
                 force: BellBits | None = None,
                 record: ShotRecord | None = None) -> tuple[BellOutcome, QuantumState]:
    """Bell-basis measurement of two qubits of opposite species.

    ``qubit_plus`` acts as the IFM control. The electron lands on E for Psi
    inputs and on F for Phi inputs; a beam splitter on the positron paths then
    sends it to A for the '+' states and to B for the '-' states. Returns
    x = [electron on E], z = [positron on B]. The measured modes are removed.

    Outcome probabilities are conditional on the state having survived up to
    the call; loss inside the network is reported as an inconclusive outcome,
    in which case the state is returned uncollapsed.
    """
    loss_in = state.loss_probability
    paths = bell_first_pass(state, qubit_plus, qubit_minus, stages)
    bell_second_pass(state, paths, stages)
    loss_net = state.loss_probability

    probe = hadamard_bs(state.copy(), paths.A, paths.B)
    dist = born_probabilities(probe, [paths.E, paths.B]).probabilities
    norm = 1.0 - loss_in
    p_lost = (loss_net - loss_in) / norm if norm > 0 else 1.0

    if force is not None:
        bits = tuple(force)
        if dist.get(bits, 0.0) <= 0.0:
            raise MeasurementError(f"Bell outcome {bits} has zero probability")
    else:
        if rng is None:
            raise ValueError("bell_measure needs an rng unless the outcome is forced")
        outcomes = sorted(dist)
        weights = [dist[k] / norm for k in outcomes] + [p_lost]
        u = rng.random() * sum(weights)
        pick = len(outcomes)
        acc = 0.0
        for k, w in enumerate(weights):
            acc += w
            if u < acc:
                pick = k
                break
        if pick == len(outcomes):
            return BellOutcome(inconclusive=True, probability=p_lost), state
        bits = outcomes[pick]

    x, z = bits
    postselect(state, paths.E, x)
    hadamard_bs(state, paths.A, paths.B)
    postselect(state, paths.B, z)
    if record is not None:
        record.outcomes += [(paths.E, x), (paths.B, z)]
    drop_modes(state, paths.t1_order)
    return BellOutcome(x, z, False, dist[bits] / norm), state


# -- chi resource state ------------------------------------------------------------

def chi_species(first: Species) -> list[Species]:
    return [first, opposite(first), first, opposite(first)]


def prepare_chi(state: QuantumState, qubits: Sequence[DualRailQubit], stages: int | None = None,
                history: list | None = None) -> QuantumState:
    """Turn four |0̄> qubits into chi = [(|00>+|11>)|00> + (|01>+|10>)|11>] / 2.

    Chain: H on q1, IFM q1->q2, IFM q2->q3, H on q1, q2, q3, IFM q3->q4.
    """
    q1, q2, q3, q4 = qubits

    def snap(name):
        if history is not None:
            history.append((name, state.copy()))

    hadamard(state, q1)
    snap("H")
    ifm_on_qubits(state, q1, q2, stages)
    snap("IFM1")
    ifm_on_qubits(state, q2, q3, stages)
    snap("IFM2")
    for q in (q1, q2, q3):
        hadamard(state, q)
    snap("HHH")
    ifm_on_qubits(state, q3, q4, stages)
    snap("IFM3")
    return state


def chi_generate(stages: int | None = None, first: Species = Species.POSITRON,
                 history: list | None = None) -> tuple[QuantumState, list[DualRailQubit]]:
    state, qubits = dual_rail_register(chi_species(first), names=["chi1", "chi2", "chi3", "chi4"])
    prepare_chi(state, qubits, stages, history)
    return state, qubits


# -- teleported CNOT ---------------------------------------------------------------

@dataclass(frozen=True)
class GcWiring:
    """Which chi qubits (0-based) meet the inputs and which carry the outputs."""

    control_pair: int
    target_pair: int
    control_out: int
    target_out: int

    def __post_init__(self):
        if sorted((self.control_pair, self.target_pair, self.control_out, self.target_out)) != [0, 1, 2, 3]:
            raise FockError("wiring must use each chi qubit exactly once")


@dataclass(frozen=True)
class CorrectionTable:
    wiring: GcWiring
    entries: dict  # (x1, z1, x2, z2) -> (word on control output, word on target output)

    def __post_init__(self):
        branches = set(itertools.product((0, 1), repeat=4))
        if set(self.entries) != branches:
            raise FockError("correction table needs exactly the 16 branches (x1, z1, x2, z2)")
        for words in self.entries.values():
            if len(words) != 2 or any(w not in PAULI_WORDS for w in words):
                raise FockError(f"bad correction entry {words!r}")


class CorrectionError(RuntimeError):
    """No Pauli correction reproduces CNOT; the teleportation wiring is wrong."""


@dataclass
class CircuitResult:
    state: QuantumState
    qubits: list[DualRailQubit]
    probability: float = 1.0
    inconclusive: bool = False
    outcomes: list[BellOutcome] = field(default_factory=list)


def _chi_species_for(control: Species, wiring: GcWiring) -> list[Species]:
    first = opposite(control) if wiring.control_pair % 2 == 0 else control
    return chi_species(first)


def gc_cnot(state: QuantumState, control: DualRailQubit, target: DualRailQubit,
            rng: np.random.Generator | None = None, table: CorrectionTable | None = None,
            stages: int | None = None, force: Branch | None = None,
            record: ShotRecord | None = None) -> CircuitResult:
    """CNOT by two Bell measurements against a fresh chi ancilla plus Pauli corrections.

    Control and target must be of opposite species. The returned qubits are new
    (the inputs are consumed by the measurements) and keep the input species.
    ``probability`` is the chance of the realized branch given survival on entry.
    """
    table = table or CORRECTION_TABLE
    return _gc_network(state, control, target, rng, table.wiring, table.entries, stages, force, record)


def _gc_network(state, control, target, rng, wiring, entries, stages, force, record) -> CircuitResult:
    require_dual_rail(state, [control, target])
    sc, st = qubit_species(state, control), qubit_species(state, target)
    if st != opposite(sc):
        raise FockError("teleported CNOT needs control and target of opposite species")
    tag = _fresh_name("chi")
    chi, modes = [], []
    for k, sp in enumerate(_chi_species_for(sc, wiring)):
        q, pair = dual_rail_modes(f"{tag}.q{k + 1}", sp)
        chi.append(q)
        modes += pair
    add_modes(state, modes, [0, 1] * 4)

    loss_in = state.loss_probability
    prepare_chi(state, chi, stages)
    survived = 1.0 - loss_in
    p_prep = (1.0 - state.loss_probability) / survived if survived > 0 else 0.0
    if force is None and not sample_survival(loss_in, state.loss_probability, rng):
        return CircuitResult(state, [chi[wiring.control_out], chi[wiring.target_out]],
                             1.0 - p_prep, True)

    b1, _ = bell_measure(state, control, chi[wiring.control_pair], rng, stages,
                         None if force is None else force[:2], record)
    if b1.inconclusive:
        return CircuitResult(state, [chi[wiring.control_out], chi[wiring.target_out]],
                             p_prep * b1.probability, True, [b1])
    b2, _ = bell_measure(state, target, chi[wiring.target_pair], rng, stages,
                         None if force is None else force[2:], record)
    out_c, out_t = chi[wiring.control_out], chi[wiring.target_out]
    if b2.inconclusive:
        return CircuitResult(state, [out_c, out_t], p_prep * b1.probability * b2.probability, True, [b1, b2])
    if entries is not None:
        word_c, word_t = entries[b1.bits + b2.bits]
        apply_pauli_string(state, out_c, word_c)
        apply_pauli_string(state, out_t, word_t)
    return CircuitResult(state, [out_c, out_t], p_prep * b1.probability * b2.probability, False, [b1, b2])


def _cnot_matrix() -> np.ndarray:
    cols = [oracle.dense_cnot(oracle.basis_state([k >> 1, k & 1]), 0, 1).vector for k in range(4)]
    return np.array(cols).T


def _pauli_matrix(word: str) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    for letter in word:
        m = oracle.PAULI[letter] @ m
    return m


# The obvious pairing: control with chi qubit 1, target with chi qubit 4,
# outputs on chi qubits 2 and 3. It realizes a reversed CNOT, so no Pauli
# table fixes it; it is kept as the first search candidate for reference.
NAIVE_WIRING = GcWiring(0, 3, 1, 2)


def candidate_wirings() -> list[GcWiring]:
    """Species-consistent wirings; those measuring chi qubits 1 and 4 come first.

    chi alternates species, so the two measured chi qubits must have opposite
    parity, and the control output must share the control input's species.
    """
    found = []
    for p in itertools.permutations(range(4)):
        w = GcWiring(*p)
        if w.control_pair % 2 != w.target_pair % 2 and w.control_out % 2 == w.target_pair % 2:
            found.append(w)
    found.remove(NAIVE_WIRING)
    found.sort(key=lambda w: {w.control_pair, w.target_pair} != {0, 3})
    return [NAIVE_WIRING] + found


def branch_map(wiring: GcWiring, branch: Branch, entries=None, stages=None) -> np.ndarray:
    """4x4 map realized by the network on one measurement branch (columns = basis inputs)."""
    cols = []
    for k in range(4):
        state, (c, t) = dual_rail_register([Species.POSITRON, Species.ELECTRON], [k >> 1, k & 1],
                                           names=["in_c", "in_t"])
        res = _gc_network(state, c, t, None, wiring, entries, stages, branch, None)
        cols.append(oracle.embed(res.state, res.qubits).vector)
    return np.array(cols).T


def _matches(candidate: np.ndarray, reference: np.ndarray, tol: float = 1e-10) -> bool:
    w = candidate @ reference.conj().T
    phase = w[0, 0]
    return abs(abs(phase) - 1) < tol and np.allclose(w, phase * np.eye(4), atol=tol)


def derive_correction_table(reference: Callable[[], np.ndarray] = _cnot_matrix,
                            wirings: Sequence[GcWiring] | None = None) -> CorrectionTable:
    """Search wiring and per-branch Pauli corrections that make the network a CNOT.

    For each wiring in turn, every (x1, z1, x2, z2) branch must be fixed by exactly
    one pair of words from {I, X, Z, XZ}; the first wiring where all 16 are fixed wins.
    """
    target = reference()
    paulis = {w: _pauli_matrix(w) for w in PAULI_WORDS}
    for wiring in (wirings if wirings is not None else candidate_wirings()):
        entries = {}
        for branch in itertools.product((0, 1), repeat=4):
            m = branch_map(wiring, branch)
            hits = [(wc, wt) for wc in PAULI_WORDS for wt in PAULI_WORDS
                    if _matches(np.kron(paulis[wc], paulis[wt]) @ m, target)]
            if len(hits) != 1:
                log.debug("wiring %s fails on branch %s (%d fixes)", wiring, branch, len(hits))
                break
            entries[branch] = hits[0]
        else:
            return CorrectionTable(wiring, entries)
    raise CorrectionError("no wiring of the chi ancilla yields a CNOT")


def verify_correction_table(table: CorrectionTable) -> list[Branch]:
    """Branches on which ``table`` fails to reproduce CNOT; empty when the table is sound."""
    target = _cnot_matrix()
    return [branch for branch in itertools.product((0, 1), repeat=4)
            if not _matches(branch_map(table.wiring, branch, table.entries), target)]


# Found by derive_correction_table(); re-checked by the test suite and `ifm-sim verify`.
# Control meets chi qubit 4, target meets chi qubit 1; outputs are chi qubits 3 and 2.
CORRECTION_TABLE = CorrectionTable(
    wiring=GcWiring(control_pair=3, target_pair=0, control_out=2, target_out=1),
    entries={
        (0, 0, 0, 0): ("I", "I"),
        (0, 0, 0, 1): ("Z", "Z"),
        (0, 0, 1, 0): ("I", "X"),
        (0, 0, 1, 1): ("Z", "XZ"),
        (0, 1, 0, 0): ("Z", "I"),
        (0, 1, 0, 1): ("I", "Z"),
        (0, 1, 1, 0): ("Z", "X"),
        (0, 1, 1, 1): ("I", "XZ"),
        (1, 0, 0, 0): ("X", "X"),
        (1, 0, 0, 1): ("XZ", "XZ"),
        (1, 0, 1, 0): ("X", "I"),
        (1, 0, 1, 1): ("XZ", "Z"),
        (1, 1, 0, 0): ("XZ", "X"),
        (1, 1, 0, 1): ("X", "XZ"),
        (1, 1, 1, 0): ("XZ", "I"),
        (1, 1, 1, 1): ("X", "Z"),
    },
)


# -- swaps and electron-electron CNOT ------------------------------------------------

def _require_basis_zero(state: QuantumState, qubit: DualRailQubit) -> None:
    pa, pb = state.position(qubit.mode_a), state.position(qubit.mode_b)
    if any(cfg[pa] or not cfg[pb] for cfg in state.terms):
        raise FockError("ancilla must be exactly |0̄>")


def swap_via_cnot(state: QuantumState, source: DualRailQubit, ancilla: DualRailQubit,
                  rng: np.random.Generator | None = None, table: CorrectionTable | None = None,
                  stages: int | None = None, force: Sequence[Branch] | None = None,
                  record: ShotRecord | None = None) -> CircuitResult:
    """Move the state of ``source`` onto a |0̄> ancilla of the other species.

    CNOT source->ancilla, then CNOT ancilla->source. Returns qubits
    (source, ancilla) where the source now holds |0̄>. With finite-stage gates
    the ancilla is only approximately |0̄> after an earlier swap, so the exact
    check applies to ideal gates only.
    """
    if stages is None:
        _require_basis_zero(state, ancilla)
    else:
        require_dual_rail(state, [source, ancilla])
    f1, f2 = (None, None) if force is None else force
    first = gc_cnot(state, source, ancilla, rng, table, stages, f1, record)
    if first.inconclusive:
        return CircuitResult(state, first.qubits, first.probability, True, first.outcomes)
    src, anc = first.qubits
    second = gc_cnot(state, anc, src, rng, table, stages, f2, record)
    anc, src = second.qubits
    return CircuitResult(state, [src, anc], first.probability * second.probability,
                         second.inconclusive, first.outcomes + second.outcomes)


def cnot_between_electrons(state: QuantumState, control: DualRailQubit, target: DualRailQubit,
                           rng: np.random.Generator | None = None, table: CorrectionTable | None = None,
                           stages: int | None = None, force: Sequence[Branch] | None = None,
                           record: ShotRecord | None = None) -> CircuitResult:
    """CNOT between two electrons: park the target on a positron, CNOT, bring it back.

    ``force`` fixes all five Bell-measurement branches (two per swap, one for the CNOT).
    """
    for q in (control, target):
        if qubit_species(state, q) != Species.ELECTRON:
            raise FockError("cnot_between_electrons needs two electron qubits")
    anc, modes = dual_rail_modes(_fresh_name("anc"), Species.POSITRON)
    add_modes(state, modes, [0, 1])
    prob = 1.0
    outcomes: list[BellOutcome] = []

    f = [None] * 5 if force is None else list(force)
    if len(f) != 5:
        raise ValueError("force needs five branches")
    steps = [
        lambda c, t, a: swap_via_cnot(state, t, a, rng, table, stages,
                                      None if force is None else f[0:2], record),
        lambda c, t, a: gc_cnot(state, c, a, rng, table, stages, f[2], record),
        lambda c, t, a: swap_via_cnot(state, a, t, rng, table, stages,
                                      None if force is None else f[3:5], record),
    ]
    c, t, a = control, target, anc
    for k, step in enumerate(steps):
        res = step(c, t, a)
        prob *= res.probability
        outcomes += res.outcomes
        if res.inconclusive:
            return CircuitResult(state, [c, t], prob, True, outcomes)
        if k == 0:
            t, a = res.qubits
        elif k == 1:
            c, a = res.qubits
        else:
            a, t = res.qubits
    if stages is not None:
        log.info("electron CNOT with %d-stage IFM gates kept probability %.6g", stages, prob)
    try:
        drop_modes(state, a.modes)
    except FockError:
        # finite-stage residue: the positron ancilla is still weakly entangled
        log.info("positron ancilla %s kept in the register (not exactly |0̄>)", a.mode_a)
    return CircuitResult(state, [c, t], prob, False, outcomes)
