"""
Compiler configuration.

Defaults live on the pydantic models; the environment (optionally a ``.env`` file
loaded through python-dotenv) overrides them, and explicit keyword overrides, usually
CLI flags, win over both.
"""

import logging
import os
from typing import Any, Dict, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

from .matcore import MAX_QUBITS

logger = logging.getLogger(__name__)

ENV_PREFIX = "CSD_"

_ENV_FIELDS = {
    "tol": "TOL",
    "max_sweeps": "MAX_SWEEPS",
    "axis_max_iter": "AXIS_MAX_ITER",
    "strict_unitarity": "STRICT_UNITARITY",
    "optimize_axes": "OPTIMIZE_AXES",
}


class CompileConfig(BaseModel):
    """Settings consumed by the pipeline and the file readers."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["nr", "r"] = "nr"
    tol: float = Field(default=1e-8, gt=0.0)
    max_sweeps: int = Field(default=20, ge=1)
    axis_max_iter: int = Field(default=100, ge=1)
    verify_tol_scale: float = Field(default=1e-6, gt=0.0)
    strict_unitarity: bool = False
    optimize_axes: bool = True

    def verify_threshold(self, nb: int) -> float:
        """Pass/fail threshold for a verification at ``nb`` qubits."""
        return self.verify_tol_scale * 2**nb


class CliConfig(BaseModel):
    """Parsed command line. Field defaults mirror the documented flag defaults."""

    command: Literal["compile", "verify", "rand"]
    input: Optional[str] = None
    output: Optional[str] = None
    circuit: Optional[str] = None
    mode: Literal["nr", "r"] = "nr"
    tol: float = Field(default=1e-8, gt=0.0)
    max_sweeps: int = Field(default=20, ge=1)
    seed: int = 0
    nb: int = Field(default=2, ge=1, le=MAX_QUBITS)
    verify: bool = False
    stats: bool = False

    def compile_config(self) -> CompileConfig:
        """Pipeline settings for this invocation."""
        return load_config(mode=self.mode, tol=self.tol, max_sweeps=self.max_sweeps)


def _env_overrides() -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for field_name, suffix in _ENV_FIELDS.items():
        raw = os.environ.get(ENV_PREFIX + suffix)
        if raw is None or raw == "":
            continue
        values[field_name] = raw
        logger.debug(f"config {field_name}={raw!r} from environment")
    return values


def load_config(dotenv_path: Optional[str] = None, **overrides: Any) -> CompileConfig:
    """
    Build a CompileConfig from defaults, environment and explicit overrides.

    Args:
        dotenv_path: Optional path of a .env file. When None, python-dotenv searches
            upward from the working directory.
        **overrides: Field values that take precedence over the environment. ``None``
            values are ignored so optional CLI flags can be passed straight through.

    Returns:
        Validated CompileConfig.

    Raises:
        pydantic.ValidationError: If a value is out of range.
    """
    load_dotenv(dotenv_path=dotenv_path, override=False)
    values = _env_overrides()
    values.update({k: v for k, v in overrides.items() if v is not None})
    return CompileConfig(**values)


def log_level_from_env(default: str = "WARNING") -> int:
    """Logging level named by CSD_LOG_LEVEL."""
    load_dotenv(override=False)
    name = os.environ.get(ENV_PREFIX + "LOG_LEVEL", default).upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.WARNING
