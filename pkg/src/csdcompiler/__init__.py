"""
csd-compiler: compile unitary matrices into CNOTs and one-qubit rotations through
recursive cosine-sine decomposition and convenient U(2)-multiplexors.
"""

from .circuits import Circuit, CompileMode, CompileStats, Gate, GateKind, simulate
from .config import CliConfig, CompileConfig, load_config
from .errors import (
    CircuitFormatError,
    CompilerError,
    MatrixFormatError,
    NotUnitaryError,
    ParameterizationError,
    VerificationError,
)
from .pipeline import (
    MuxSequence,
    RelaxationReport,
    compile_nr,
    compile_r,
    csd_tree,
    diagonal_to_seo,
    epsilon_lower_bound,
    epsilon_nr,
    epsilon_r,
)

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "CircuitFormatError",
    "CliConfig",
    "CompileConfig",
    "CompileMode",
    "CompileStats",
    "CompilerError",
    "Gate",
    "GateKind",
    "MatrixFormatError",
    "MuxSequence",
    "NotUnitaryError",
    "ParameterizationError",
    "RelaxationReport",
    "VerificationError",
    "compile_nr",
    "compile_r",
    "csd_tree",
    "diagonal_to_seo",
    "epsilon_lower_bound",
    "epsilon_nr",
    "epsilon_r",
    "load_config",
    "simulate",
]
