"""Beam splitters, dual-rail Paulis and the interaction-free-measurement gate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    DualRailQubit,
    FockError,
    QuantumState,
    _notify,
    annihilates,
    apply_two_mode_mixer,
    permute_modes,
)

_S = 1 / math.sqrt(2)
# basis (particle on x, particle on y)
HADAMARD_BS = np.array([[-_S, _S], [_S, _S]], dtype=complex)
PAULI_Z_RAILS = np.array([[-1, 0], [0, 1]], dtype=complex)


@dataclass(frozen=True)
class BeamSplitterParams:
    theta: float

    @property
    def transmissivity(self) -> float:
        return math.sin(self.theta) ** 2

    @property
    def reflectivity(self) -> float:
        return 1.0 - self.transmissivity

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        # columns: image of |1>_a|0>_b and |0>_a|1>_b
        return np.array([[c, s], [-s, c]], dtype=complex)


@dataclass(frozen=True)
class IfmGateSpec:
    """IFM gate on control path ``control_mode`` and target rails (a, b).

    ``stages=None`` selects the ideal infinite-stage gate.
    """

    control_mode: str
    target_a: str
    target_b: str
    stages: int | None = None

    def __post_init__(self):
        if len({self.control_mode, self.target_a, self.target_b}) != 3:
            raise FockError("IFM gate needs three distinct modes")
        if self.stages is not None:
            if isinstance(self.stages, float) and math.isinf(self.stages):
                object.__setattr__(self, "stages", None)
            elif int(self.stages) != self.stages or self.stages < 1:
                raise FockError(f"stage count must be a positive integer, got {self.stages!r}")
            else:
                object.__setattr__(self, "stages", int(self.stages))

    @property
    def ideal(self) -> bool:
        return self.stages is None

    @property
    def theta(self) -> float:
        return 0.0 if self.stages is None else math.pi / (2 * self.stages)


def survival_probability(n: int) -> float:
    """cos^(2N)(pi/2N): chance the probe leaves unabsorbed with the object present."""
    return math.cos(math.pi / (2 * n)) ** (2 * n)


def beam_splitter(state: QuantumState, a: str, b: str, theta: float) -> QuantumState:
    return apply_two_mode_mixer(state, a, b, BeamSplitterParams(theta).matrix())


def hadamard_bs(state: QuantumState, x: str, y: str) -> QuantumState:
    return apply_two_mode_mixer(state, x, y, HADAMARD_BS)


def hadamard(state: QuantumState, qubit: DualRailQubit) -> QuantumState:
    return hadamard_bs(state, qubit.mode_a, qubit.mode_b)


def pauli_x(state: QuantumState, qubit: DualRailQubit) -> QuantumState:
    return permute_modes(state, {qubit.mode_a: qubit.mode_b, qubit.mode_b: qubit.mode_a})


def pauli_z(state: QuantumState, qubit: DualRailQubit) -> QuantumState:
    return apply_two_mode_mixer(state, qubit.mode_a, qubit.mode_b, PAULI_Z_RAILS)


def apply_pauli_string(state: QuantumState, qubit: DualRailQubit, word: str) -> QuantumState:
    """Apply the letters of ``word`` ('I', 'X', 'Z') left to right."""
    for letter in word:
        if letter == "X":
            pauli_x(state, qubit)
        elif letter == "Z":
            pauli_z(state, qubit)
        elif letter != "I":
            raise FockError(f"unknown Pauli letter {letter!r}")
    return state


def _check_species(state: QuantumState, spec: IfmGateSpec) -> tuple[int, int, int]:
    sx = state.mode(spec.control_mode).species
    sa = state.mode(spec.target_a).species
    if not annihilates(sx, sa):
        raise FockError(f"control {sx.value} cannot absorb target {sa.value}")
    return (state.position(spec.control_mode), state.position(spec.target_a),
            state.position(spec.target_b))


def ideal_ifm(state: QuantumState, spec: IfmGateSpec) -> QuantumState:
    """Infinite-stage IFM gate.

    With the control path empty the target particle is routed b -> a and
    a -> -b; with it occupied a particle on b passes unchanged and a particle
    on a is absorbed.
    """
    x, a, b = _check_species(state, spec)
    out: dict = {}
    lost = 0.0
    for cfg, amp in state.terms.items():
        cx, ca, cb = cfg[x], cfg[a], cfg[b]
        if cx and ca:
            lost += abs(amp) ** 2
            continue
        if not cx and ca != cb:
            new = list(cfg)
            new[a], new[b] = cb, ca
            cfg, amp = tuple(new), (amp if cb else -amp)
        out[cfg] = out.get(cfg, 0j) + amp
    state.terms = out
    state.loss_probability = min(1.0, state.loss_probability + lost)
    _notify("ideal_ifm", state)
    return state


def finite_ifm(state: QuantumState, spec: IfmGateSpec) -> QuantumState:
    """N-stage IFM gate: N times (beam splitter at pi/2N on (a, b), then absorb on (x, a)).

    Terms are grouped by their occupancy outside the target rails. An unblocked
    group sees N rotations, i.e. one rotation by N*theta = pi/2. A blocked group
    loses its rail-a amplitude after the first stage and afterwards only decays
    by cos(theta) per stage, so the N-stage product has a closed form.
    """
    if spec.stages is None:
        raise FockError("finite_ifm needs a finite stage count")
    x, a, b = _check_species(state, spec)
    n = spec.stages
    c, s = math.cos(spec.theta), math.sin(spec.theta)
    c_n, s_n = math.cos(n * spec.theta), math.sin(n * spec.theta)

    out: dict = {}
    lost = 0.0
    groups: dict = {}
    for cfg, amp in state.terms.items():
        ca, cb = cfg[a], cfg[b]
        if ca == cb:
            if ca and cfg[x]:
                lost += abs(amp) ** 2
            else:
                out[cfg] = out.get(cfg, 0j) + amp
            continue
        rest = list(cfg)
        rest[a] = rest[b] = 0
        slot = groups.setdefault(tuple(rest), [0j, 0j])
        slot[0 if ca else 1] += amp

    for rest, (va, vb) in groups.items():
        if rest[x]:
            absorbed = c * va + s * vb
            vb = -s * va + c * vb
            lost += abs(absorbed) ** 2 + abs(vb) ** 2 * (1 - c ** (2 * (n - 1)))
            va, vb = 0j, vb * c ** (n - 1)
        else:
            va, vb = c_n * va + s_n * vb, -s_n * va + c_n * vb
        for amp, on in ((va, a), (vb, b)):
            if abs(amp) >= 1e-15:
                cfg = list(rest)
                cfg[on] = 1
                cfg = tuple(cfg)
                out[cfg] = out.get(cfg, 0j) + amp

    state.terms = out
    state.loss_probability = min(1.0, state.loss_probability + lost)
    state._prune()
    _notify("finite_ifm", state)
    return state


def ifm(state: QuantumState, spec: IfmGateSpec) -> QuantumState:
    return ideal_ifm(state, spec) if spec.ideal else finite_ifm(state, spec)


def ifm_on_qubits(state: QuantumState, control: DualRailQubit, target: DualRailQubit,
                  stages: int | None = None) -> QuantumState:
    """IFM gate between dual-rail qubits, using the control's |0̄> rail as the object path.

    On a |0̄> target this gives |0̄>|0̄> -> |0̄>|0̄> and |1̄>|0̄> -> |1̄>|1̄>.
    """
    spec = IfmGateSpec(control.mode_b, target.mode_a, target.mode_b, stages)
    return ifm(state, spec)
