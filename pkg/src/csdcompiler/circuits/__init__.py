"""Circuit model, simulator and file formats."""

from .formats import (
    format_matrix,
    read_circuit,
    read_matrix,
    write_circuit,
    write_matrix,
)
from .model import (
    Circuit,
    CompileMode,
    CompileStats,
    Gate,
    GateKind,
    cnot_count,
    reconstruction_error,
    simulate,
)

__all__ = [
    "Circuit",
    "CompileMode",
    "CompileStats",
    "Gate",
    "GateKind",
    "cnot_count",
    "reconstruction_error",
    "simulate",
    "format_matrix",
    "read_circuit",
    "read_matrix",
    "write_circuit",
    "write_matrix",
]
