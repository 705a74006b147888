"""Decomposition of multi-qubit unitaries into trapped-ion pulse sequences."""

from .objective import FullUnitary, QecSubspace, qec_spec
from .optimizer import OptimizationReport, OptimizerConfig, optimize
from .qops import DomainError, Generator, fidelity, pulse_unitary
from .seqmodel import (
    Pulse,
    PulseSequence,
    SequenceSyntaxError,
    canonicalize,
    compile_sequence,
    format_sequence,
    parse_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FullUnitary",
    "Generator",
    "OptimizationReport",
    "OptimizerConfig",
    "Pulse",
    "PulseSequence",
    "QecSubspace",
    "SequenceSyntaxError",
    "canonicalize",
    "compile_sequence",
    "fidelity",
    "format_sequence",
    "optimize",
    "parse_sequence",
    "pulse_unitary",
    "qec_spec",
]
