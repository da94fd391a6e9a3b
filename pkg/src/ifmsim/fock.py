"""Sparse occupation-number states over labeled spatial modes.

A state maps occupancy tuples (one 0/1 bit per registered mode, in register
order) to complex amplitudes. Probability that has been absorbed is kept as a
single decoherent scalar, ``loss_probability``, so that

    sum(|amp|**2) + loss_probability == 1

holds after every operation.

All operations mutate the state in place and return it, so calls chain.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

PRUNE_THRESHOLD = 1e-15
UNITARY_TOL = 1e-12
_EYE2 = np.eye(2)

Config = tuple[int, ...]


class FockError(ValueError):
    """Invalid register, configuration or operation arguments."""


class Species(str, Enum):
    PHOTON = "photon"
    ELECTRON = "electron"
    POSITRON = "positron"


def annihilates(s1: Species, s2: Species) -> bool:
    """True when particles of the two species destroy each other on contact.

    Electron/positron pairs annihilate. A photon stands in for the probe of the
    optical setup and is absorbed by any massive object.
    """
    pair = {s1, s2}
    if pair == {Species.ELECTRON, Species.POSITRON}:
        return True
    return Species.PHOTON in pair and len(pair) == 2


@dataclass(frozen=True)
class Mode:
    id: str
    species: Species
    label: str = ""


@dataclass(frozen=True)
class DualRailQubit:
    """Two modes carrying one particle: |1̄> on ``mode_a``, |0̄> on ``mode_b``."""

    mode_a: str
    mode_b: str

    @property
    def modes(self) -> tuple[str, str]:
        return (self.mode_a, self.mode_b)


# observers called as fn(op_name, state) after every primitive operation
_observers: list[Callable[[str, "QuantumState"], None]] = []


@contextlib.contextmanager
def observe(fn: Callable[[str, "QuantumState"], None]) -> Iterator[None]:
    """Call ``fn(op_name, state)`` after each state operation inside the block."""
    _observers.append(fn)
    try:
        yield
    finally:
        _observers.remove(fn)


def _notify(name: str, state: "QuantumState") -> None:
    for fn in _observers:
        fn(name, state)


class QuantumState:
    def __init__(self, modes: Sequence[Mode], terms: dict[Config, complex], loss_probability: float = 0.0):
        self.modes: list[Mode] = list(modes)
        self._index = _build_index(self.modes)
        self.terms = terms
        self.loss_probability = float(loss_probability)

    def __repr__(self) -> str:
        labels = ",".join(m.label or m.id for m in self.modes)
        body = ", ".join(
            f"|{''.join(map(str, cfg))}>: {amp:.6g}" for cfg, amp in sorted(self.terms.items())
        )
        return f"QuantumState([{labels}] {{{body}}}, loss={self.loss_probability:.6g})"

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def mode_ids(self) -> list[str]:
        return [m.id for m in self.modes]

    def position(self, mode_id: str) -> int:
        try:
            return self._index[mode_id]
        except KeyError:
            raise FockError(f"unknown mode {mode_id!r}") from None

    def mode(self, mode_id: str) -> Mode:
        return self.modes[self.position(mode_id)]

    def kept_probability(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def total_probability(self) -> float:
        return self.kept_probability() + self.loss_probability

    def copy(self) -> "QuantumState":
        return QuantumState(self.modes, dict(self.terms), self.loss_probability)

    def config(self, occupancy: Mapping[str, int]) -> Config:
        """Occupancy tuple from a ``{mode_id: bit}`` map; unlisted modes are 0."""
        cfg = [0] * len(self.modes)
        for mid, bit in occupancy.items():
            cfg[self.position(mid)] = _bit(bit)
        return tuple(cfg)

    def occupied(self, cfg: Config) -> list[str]:
        return [m.id for m, bit in zip(self.modes, cfg) if bit]

    def _prune(self) -> None:
        self.terms = {c: a for c, a in self.terms.items() if abs(a) >= PRUNE_THRESHOLD}


def _build_index(modes: Sequence[Mode]) -> dict[str, int]:
    index: dict[str, int] = {}
    for pos, m in enumerate(modes):
        if m.id in index:
            raise FockError(f"duplicate mode id {m.id!r}")
        index[m.id] = pos
    return index


def _bit(value) -> int:
    if value not in (0, 1):
        raise FockError(f"occupancy must be 0 or 1, got {value!r}")
    return int(value)


def new_register(modes: Sequence[Mode], initial: Sequence[int]) -> QuantumState:
    """Single-term state with amplitude 1 on ``initial``."""
    if len(initial) != len(modes):
        raise FockError(f"initial occupancy has {len(initial)} entries for {len(modes)} modes")
    cfg = tuple(_bit(b) for b in initial)
    state = QuantumState(modes, {cfg: 1 + 0j})
    _notify("new_register", state)
    return state


def amplitude(state: QuantumState, config: Sequence[int]) -> complex:
    if len(config) != len(state.modes):
        raise FockError(f"config length {len(config)} does not match {len(state.modes)} modes")
    return complex(state.terms.get(tuple(config), 0j))


def apply_two_mode_mixer(state: QuantumState, mode_i: str, mode_j: str, matrix) -> QuantumState:
    """Mix the single-excitation sector of two modes by a 2x2 unitary.

    Column ``k`` of ``matrix`` is the image of "particle in mode k" in the basis
    (particle in ``mode_i``, particle in ``mode_j``). Terms where both or neither
    mode is occupied are left alone.
    """
    if mode_i == mode_j:
        raise FockError("mixer needs two distinct modes")
    u = np.asarray(matrix, dtype=complex)
    if u.shape != (2, 2) or np.max(np.abs(u.conj().T @ u - _EYE2)) > UNITARY_TOL:
        raise FockError("mixer matrix must be a 2x2 unitary")
    i, j = state.position(mode_i), state.position(mode_j)
    u00, u01, u10, u11 = complex(u[0, 0]), complex(u[0, 1]), complex(u[1, 0]), complex(u[1, 1])

    out: dict[Config, complex] = {}
    for cfg, amp in state.terms.items():
        if cfg[i] == cfg[j]:
            out[cfg] = out.get(cfg, 0j) + amp
            continue
        on_i = _set(cfg, i, 1, j, 0)
        on_j = _set(cfg, i, 0, j, 1)
        if cfg[i]:
            ci, cj = u00 * amp, u10 * amp
        else:
            ci, cj = u01 * amp, u11 * amp
        out[on_i] = out.get(on_i, 0j) + ci
        out[on_j] = out.get(on_j, 0j) + cj
    state.terms = out
    state._prune()
    _notify("apply_two_mode_mixer", state)
    return state


def _set(cfg: Config, i: int, bi: int, j: int, bj: int) -> Config:
    lst = list(cfg)
    lst[i], lst[j] = bi, bj
    return tuple(lst)


def annihilate_if_coincident(state: QuantumState, control_mode: str, target_mode: str) -> QuantumState:
    """Move every term with both modes occupied into the loss sink."""
    if control_mode == target_mode:
        raise FockError("annihilation needs two distinct modes")
    sc, st = state.mode(control_mode).species, state.mode(target_mode).species
    if not annihilates(sc, st):
        raise FockError(f"{sc.value} and {st.value} do not annihilate")
    i, j = state.position(control_mode), state.position(target_mode)
    kept: dict[Config, complex] = {}
    lost = 0.0
    for cfg, amp in state.terms.items():
        if cfg[i] and cfg[j]:
            lost += abs(amp) ** 2
        else:
            kept[cfg] = amp
    state.terms = kept
    state.loss_probability = min(1.0, state.loss_probability + lost)
    _notify("annihilate_if_coincident", state)
    return state


def permute_modes(state: QuantumState, permutation: Mapping[str, str]) -> QuantumState:
    """Move the occupancy of mode ``k`` to mode ``permutation[k]``.

    Modes missing from the map stay put. The map must be a bijection on the
    modes it names.
    """
    src = list(permutation)
    dst = list(permutation.values())
    if sorted(src) != sorted(dst) or len(set(dst)) != len(dst):
        raise FockError("permutation must be a bijection")
    moves = [(state.position(s), state.position(d)) for s, d in permutation.items()]
    out: dict[Config, complex] = {}
    for cfg, amp in state.terms.items():
        new = list(cfg)
        for s, d in moves:
            new[d] = cfg[s]
        out[tuple(new)] = amp
    state.terms = out
    _notify("permute_modes", state)
    return state


def reorder_modes(state: QuantumState, order: Sequence[str]) -> QuantumState:
    """Change the register's position order. Each mode keeps its own occupancy."""
    if sorted(order) != sorted(state.mode_ids):
        raise FockError("new order must list every registered mode exactly once")
    pos = [state.position(mid) for mid in order]
    state.modes = [state.modes[p] for p in pos]
    state._index = _build_index(state.modes)
    state.terms = {tuple(cfg[p] for p in pos): amp for cfg, amp in state.terms.items()}
    _notify("reorder_modes", state)
    return state


def add_modes(state: QuantumState, modes: Sequence[Mode], occupancy: Sequence[int] | None = None) -> QuantumState:
    """Append modes in a definite occupancy (vacuum by default)."""
    occ = tuple(_bit(b) for b in (occupancy if occupancy is not None else [0] * len(modes)))
    if len(occ) != len(modes):
        raise FockError("occupancy length does not match new modes")
    state.modes = state.modes + list(modes)
    state._index = _build_index(state.modes)
    state.terms = {cfg + occ: amp for cfg, amp in state.terms.items()}
    _notify("add_modes", state)
    return state


def drop_modes(state: QuantumState, mode_ids: Iterable[str]) -> QuantumState:
    """Remove modes whose occupancy is the same in every surviving term."""
    drop = {state.position(mid) for mid in mode_ids}
    for p in drop:
        values = {cfg[p] for cfg in state.terms}
        if len(values) > 1:
            raise FockError(f"mode {state.modes[p].id!r} is not in a definite occupancy")
    keep = [p for p in range(len(state.modes)) if p not in drop]
    out: dict[Config, complex] = {}
    for cfg, amp in state.terms.items():
        key = tuple(cfg[p] for p in keep)
        out[key] = out.get(key, 0j) + amp
    state.modes = [state.modes[p] for p in keep]
    state._index = _build_index(state.modes)
    state.terms = out
    _notify("drop_modes", state)
    return state


def scale_kept(state: QuantumState, factor: complex) -> QuantumState:
    state.terms = {c: a * factor for c, a in state.terms.items()}
    state._prune()
    return state


# -- dual-rail helpers ---------------------------------------------------------

def dual_rail_modes(name: str, species: Species) -> tuple[DualRailQubit, list[Mode]]:
    """Fresh rail pair named ``<name>.a`` / ``<name>.b``."""
    a = Mode(f"{name}.a", species, f"{name}.a")
    b = Mode(f"{name}.b", species, f"{name}.b")
    return DualRailQubit(a.id, b.id), [a, b]


def dual_rail_register(species: Sequence[Species], bits: Sequence[int] | None = None,
                       names: Sequence[str] | None = None) -> tuple[QuantumState, list[DualRailQubit]]:
    """Register of dual-rail qubits in a computational basis state (|0̄...0̄> by default)."""
    names = list(names) if names is not None else [f"q{k}" for k in range(len(species))]
    bits = list(bits) if bits is not None else [0] * len(species)
    if not (len(names) == len(bits) == len(species)):
        raise FockError("species, bits and names must have equal length")
    qubits, modes, occ = [], [], []
    for name, sp, bit in zip(names, species, bits):
        q, pair = dual_rail_modes(name, sp)
        qubits.append(q)
        modes += pair
        occ += [1, 0] if _bit(bit) else [0, 1]
    return new_register(modes, occ), qubits


def load_dual_rail(state: QuantumState, qubits: Sequence[DualRailQubit], amplitudes) -> QuantumState:
    """Replace the state with ``sum_k amplitudes[k] |k>`` on ``qubits``.

    Basis index ``k`` reads the first qubit as its most significant bit. Modes
    outside ``qubits`` are set empty. ``amplitudes`` must be normalized.
    """
    amps = np.asarray(amplitudes, dtype=complex).ravel()
    n = len(qubits)
    if amps.size != 2 ** n:
        raise FockError(f"need {2 ** n} amplitudes for {n} qubits, got {amps.size}")
    if abs(np.vdot(amps, amps).real - 1) > 1e-9:
        raise FockError("amplitudes are not normalized")
    pa = [state.position(q.mode_a) for q in qubits]
    pb = [state.position(q.mode_b) for q in qubits]
    terms: dict[Config, complex] = {}
    for k, amp in enumerate(amps):
        if abs(amp) < PRUNE_THRESHOLD:
            continue
        cfg = [0] * len(state.modes)
        for q in range(n):
            bit = (k >> (n - 1 - q)) & 1
            cfg[pa[q] if bit else pb[q]] = 1
        terms[tuple(cfg)] = complex(amp)
    state.terms = terms
    state.loss_probability = 0.0
    _notify("load_dual_rail", state)
    return state


def qubit_species(state: QuantumState, qubit: DualRailQubit) -> Species:
    sa, sb = state.mode(qubit.mode_a).species, state.mode(qubit.mode_b).species
    if sa != sb:
        raise FockError("rails of a qubit must carry the same species")
    return sa


def is_dual_rail_valid(state: QuantumState, qubits: Sequence[DualRailQubit]) -> bool:
    """Every surviving term has exactly one occupied rail per qubit."""
    pos = [(state.position(q.mode_a), state.position(q.mode_b)) for q in qubits]
    return all(cfg[a] + cfg[b] == 1 for cfg in state.terms for a, b in pos)


def require_dual_rail(state: QuantumState, qubits: Sequence[DualRailQubit]) -> None:
    if not is_dual_rail_valid(state, qubits):
        raise FockError("state is not dual-rail valid on the given qubits")
