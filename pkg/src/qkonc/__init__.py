"""Fidelity-kernel and barren-plateau concentration toolkit."""

from .circuits import AnsatzSpec, Circuit, Family, bind, build, build_encoder
from .kernel import GramMatrix, gram, kernel_entry, kernel_entry_shots
from .statevec import Gate, GateKind, StateVector, apply_gate, fidelity, prob_all_zeros

__version__ = "0.1.0"

__all__ = [
    "AnsatzSpec",
    "Circuit",
    "Family",
    "Gate",
    "GateKind",
    "GramMatrix",
    "StateVector",
    "apply_gate",
    "bind",
    "build",
    "build_encoder",
    "fidelity",
    "gram",
    "kernel_entry",
    "kernel_entry_shots",
    "prob_all_zeros",
]
