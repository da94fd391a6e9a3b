"""Projective detection, Born-rule sampling and post-selection.

Detection works on the surviving (kept) part of a state. The loss sink is left
at its pre-detection value and the kept terms are rescaled to carry the rest of
the probability, so ``kept + loss == 1`` still holds after a collapse.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fock import FockError, QuantumState, _notify


class MeasurementError(FockError):
    """Detection on an empty or impossible branch."""


@dataclass
class Distribution:
    probabilities: dict[tuple[int, ...], float]
    lost: float

    def total(self) -> float:
        return sum(self.probabilities.values()) + self.lost

    def conditional(self) -> dict[tuple[int, ...], float]:
        """Probabilities renormalized over the kept outcomes."""
        kept = sum(self.probabilities.values())
        if kept <= 0:
            raise MeasurementError("no surviving probability")
        return {k: v / kept for k, v in self.probabilities.items()}


@dataclass
class ShotRecord:
    seed: int
    shot: int = 0
    outcomes: list[tuple[str, int]] = field(default_factory=list)
    final_kept_probability: float = 1.0


def shot_rng(seed: int, shot: int = 0) -> np.random.Generator:
    """Independent generator for one shot, derived from the root seed by counter."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shot,)))


def born_probabilities(state: QuantumState, modes: Sequence[str]) -> Distribution:
    pos = [state.position(m) for m in modes]
    probs: dict[tuple[int, ...], float] = {}
    for cfg, amp in state.terms.items():
        key = tuple(cfg[p] for p in pos)
        probs[key] = probs.get(key, 0.0) + abs(amp) ** 2
    return Distribution(probs, state.loss_probability)


def _collapse(state: QuantumState, pos: int, bit: int, mass: float) -> None:
    kept = 1.0 - state.loss_probability
    factor = (kept / mass) ** 0.5
    state.terms = {c: a * factor for c, a in state.terms.items() if c[pos] == bit}


def postselect(state: QuantumState, mode: str, bit: int) -> tuple[QuantumState, float]:
    """Collapse onto ``mode == bit``; returns the branch probability given survival."""
    pos = state.position(mode)
    kept = state.kept_probability()
    mass = sum(abs(a) ** 2 for c, a in state.terms.items() if c[pos] == bit)
    if kept <= 0 or mass <= 0:
        raise MeasurementError(f"outcome {mode}={bit} has zero probability")
    _collapse(state, pos, bit, mass)
    _notify("postselect", state)
    return state, mass / kept


def detect(state: QuantumState, mode: str, rng: np.random.Generator,
           record: ShotRecord | None = None) -> tuple[int, QuantumState]:
    """Sample the occupancy of ``mode`` and collapse the state onto it."""
    pos = state.position(mode)
    kept = state.kept_probability()
    if kept <= 0:
        raise MeasurementError("all probability has been lost")
    p1 = sum(abs(a) ** 2 for c, a in state.terms.items() if c[pos]) / kept
    bit = int(rng.random() < p1)
    mass = (p1 if bit else 1 - p1) * kept
    _collapse(state, pos, bit, mass)
    if record is not None:
        record.outcomes.append((mode, bit))
    _notify("detect", state)
    return bit, state


def sample_survival(loss_before: float, loss_after: float, rng: np.random.Generator) -> bool:
    """Decide whether a trajectory survived the loss accrued between two points."""
    if loss_after <= loss_before:
        return True
    p_lost = (loss_after - loss_before) / (1.0 - loss_before)
    return bool(rng.random() >= p_lost)
