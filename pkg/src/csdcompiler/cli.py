"""Command-line interface for csd-compiler."""

import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional

from pydantic import ValidationError

from .circuits import (
    format_matrix,
    read_circuit,
    read_matrix,
    reconstruction_error,
    write_circuit,
    write_matrix,
)
from .config import CliConfig, log_level_from_env
from .errors import CircuitFormatError, CompilerError, UsageError, VerificationError
from .matcore import haar_random_unitary
from .pipeline import (
    compile_nr,
    compile_r,
    epsilon_lower_bound,
    epsilon_nr,
    epsilon_r,
    expected_cnot_count,
)

logger = logging.getLogger(__name__)

STATS_KEYS = (
    "nb",
    "mode",
    "cnot_count",
    "rotation_count",
    "sweeps_run",
    "converged",
    "expected_cnot_count",
    "epsilon_nr",
    "epsilon_r",
    "epsilon_lower_bound",
)


def create_parser() -> argparse.ArgumentParser:
    """Create command-line argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--in", dest="input", help="Input matrix file")
    common.add_argument(
        "--out", dest="output", help="Output file (the circuit file for verify)"
    )
    common.add_argument("--mode", choices=["nr", "r"], default="nr", help="Compilation mode")
    common.add_argument("--tol", type=float, default=1e-8, help="Relaxation tolerance")
    common.add_argument(
        "--max-sweeps", dest="max_sweeps", type=int, default=20, help="Relaxation sweep limit"
    )
    common.add_argument("--seed", type=int, default=0, help="Random seed for rand")
    common.add_argument("--nb", type=int, default=2, help="Qubit count for rand")
    common.add_argument(
        "--verify", action="store_true", help="Simulate the compiled circuit and check it"
    )
    common.add_argument(
        "--stats",
        action="store_true",
        help=(
            "Print gate statistics. cnot_count is the emitted count and "
            "expected_cnot_count what this compiler emits for the run; epsilon_nr and "
            "epsilon_r are the count-table rows. The single-sweep mode emits 2 CNOTs "
            "fewer than epsilon_nr because its last diagonal costs 2^nb - 2."
        ),
    )

    parser = argparse.ArgumentParser(
        prog="csd-compiler",
        description="csd-compiler - compile unitary matrices into CNOTs and rotations",
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    subparsers.add_parser("compile", parents=[common], help="Compile a matrix file")
    subparsers.add_parser("verify", parents=[common], help="Check a circuit against a matrix")
    subparsers.add_parser("rand", parents=[common], help="Write a Haar-random unitary")
    return parser


def _require(value: Optional[str], flag: str) -> str:
    if not value:
        raise UsageError(f"{flag} is required")
    return value


def cmd_compile(config: CliConfig) -> int:
    """Compile --in into --out."""
    compile_config = config.compile_config()
    u = read_matrix(_require(config.input, "--in"), strict=compile_config.strict_unitarity)
    output = _require(config.output, "--out")
    if compile_config.mode == "nr":
        circuit, stats = compile_nr(u, compile_config)
        sweeps_run, converged = 1, False
    else:
        circuit, report, stats = compile_r(u, config=compile_config)
        sweeps_run, converged = report.sweeps_run, report.converged
    write_circuit(circuit, output)

    nb = circuit.nb
    if config.stats:
        summary = stats.to_dict()
        summary.update(
            sweeps_run=sweeps_run,
            converged=str(converged).lower(),
            expected_cnot_count=expected_cnot_count(nb, converged),
            epsilon_nr=epsilon_nr(nb),
            epsilon_r=epsilon_r(nb),
            epsilon_lower_bound=epsilon_lower_bound(nb),
        )
        for key in STATS_KEYS:
            print(f"{key}: {summary[key]}")
    if config.verify:
        threshold = compile_config.verify_threshold(nb)
        error = reconstruction_error(circuit, u)
        print(f"reconstruction_error: {error:.3e}")
        if error > threshold:
            raise VerificationError(error, threshold)
    return 0


def cmd_verify(config: CliConfig) -> int:
    """Check the circuit in --out against the matrix in --in."""
    compile_config = config.compile_config()
    u = read_matrix(_require(config.input, "--in"), strict=compile_config.strict_unitarity)
    circuit = read_circuit(_require(config.circuit, "--out"))
    nb = u.shape[0].bit_length() - 1
    if circuit.nb != nb:
        raise CircuitFormatError(f"circuit has NB {circuit.nb}, matrix has nb={nb}", 1)
    threshold = compile_config.verify_threshold(nb)
    error = reconstruction_error(circuit, u)
    verdict = "PASS" if error <= threshold else "FAIL"
    print(f"reconstruction_error: {error:.3e} threshold: {threshold:.3e} {verdict}")
    if error > threshold:
        raise VerificationError(error, threshold)
    return 0


def cmd_rand(config: CliConfig) -> int:
    """Write a Haar-random unitary to --out, or stdout."""
    u = haar_random_unitary(config.nb, config.seed)
    if config.output:
        write_matrix(u, config.output)
    else:
        sys.stdout.write(format_matrix(u))
    return 0


COMMANDS: Dict[str, Callable[[CliConfig], int]] = {
    "compile": cmd_compile,
    "verify": cmd_verify,
    "rand": cmd_rand,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    logging.basicConfig(
        level=log_level_from_env(), format="%(levelname)s %(name)s: %(message)s"
    )
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    try:
        config = CliConfig(
            command=args.command,
            input=args.input,
            output=args.output,
            circuit=args.output if args.command == "verify" else None,
            mode=args.mode,
            tol=args.tol,
            max_sweeps=args.max_sweeps,
            seed=args.seed,
            nb=args.nb,
            verify=args.verify,
            stats=args.stats,
        )
    except ValidationError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2

    try:
        return COMMANDS[config.command](config)
    except CompilerError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        logger.exception(f"internal error in {config.command}")
        print(f"Internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
