"""Interaction-free-measurement gates on dual-rail electron/positron qubits."""

from .fock import (
    DualRailQubit,
    Mode,
    QuantumState,
    Species,
    amplitude,
    dual_rail_register,
    load_dual_rail,
    new_register,
)
from .gates import IfmGateSpec, beam_splitter, finite_ifm, hadamard_bs, ideal_ifm, survival_probability
from .circuits import (
    CORRECTION_TABLE,
    bell_generate,
    bell_measure,
    chi_generate,
    cnot_between_electrons,
    gc_cnot,
    swap_via_cnot,
)

__version__ = "0.1.0"
