"""Utility functions for error handling, serialization and file output."""

import dataclasses
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
from pydantic import ValidationError

logger = logging.getLogger(__name__)


class FluxNoiseError(Exception):
    """Base class for all toolkit errors."""


class ParameterDomainError(FluxNoiseError, ValueError):
    """A physical parameter lies outside the domain where the model is valid."""


class UnsupportedSpectrumError(ParameterDomainError):
    """The requested operation has no meaning for this spectrum kind."""


class NumericalError(FluxNoiseError):
    """A numerical procedure failed to produce a trustworthy value."""


class ConvergenceError(NumericalError):
    """Quadrature or root finding did not converge within its budget."""

    def __init__(self, message: str, partial_estimate: Optional[float] = None):
        super().__init__(message)
        self.partial_estimate = partial_estimate


class DivisionDegeneracyError(NumericalError):
    """A ratio was requested whose denominator vanished."""

    def __init__(self, message: str, xi: Optional[float] = None,
                 separation: Optional[float] = None):
        super().__init__(message)
        self.xi = xi
        self.separation = separation


class ConfigError(FluxNoiseError):
    """Run configuration could not be parsed or violates an invariant."""


class DatasetError(FluxNoiseError):
    """A measured dataset could not be read or failed validation."""

    def __init__(self, message: str, row: Optional[int] = None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def exit_code_for(error: Exception) -> int:
    """Map an exception onto the CLI exit-code categories."""
    if isinstance(error, (ConfigError, ParameterDomainError, ValidationError)):
        return EXIT_CONFIG
    if isinstance(error, DatasetError):
        return EXIT_DATA
    if isinstance(error, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_UNEXPECTED


def format_error_message(error: Exception, context: str = "") -> str:
    """Format error message for user display."""
    error_type = type(error).__name__
    error_msg = str(error)

    if context:
        return f"Error in {context}: {error_type} - {error_msg}"
    else:
        return f"{error_type}: {error_msg}"


def safe_json_serialize(obj: Any) -> Any:
    """Safely serialize objects for JSON output."""
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    elif isinstance(obj, np.generic):
        return obj.item()
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return dataclasses.asdict(obj)
    elif hasattr(obj, 'model_dump'):  # pydantic models
        return obj.model_dump(mode="json")
    elif hasattr(obj, 'isoformat'):  # datetime objects
        return obj.isoformat()
    elif isinstance(obj, (set, frozenset)):
        return sorted(obj)
    elif isinstance(obj, Path):
        return str(obj)
    else:
        return str(obj)


def finite_or_none(value: float) -> Optional[float]:
    """JSON has no inf/nan; report them as null."""
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Write text to ``path`` through a temporary file and an atomic rename."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise

    logger.debug(f"Wrote {target}")
    return target
