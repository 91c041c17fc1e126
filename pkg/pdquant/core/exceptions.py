from typing import Any, Dict, Optional, Tuple

from pydantic import ValidationError as PydanticValidationError

EXIT_OK = 0
EXIT_DATA_FAILURE = 1
EXIT_USAGE = 2


class AppException(Exception):
    """Base application exception."""

    def __init__(
        self,
        message: str,
        exit_code: int = EXIT_DATA_FAILURE,
        details: Optional[Dict[str, Any]] = None
    ):
        self.message = message
        self.exit_code = exit_code
        self.details = details or {}
        super().__init__(self.message)


class NotFoundError(AppException):
    """Input resource not found exception."""

    def __init__(self, resource: str, resource_id: str):
        super().__init__(
            message=f"{resource} {resource_id} not found",
            exit_code=EXIT_DATA_FAILURE,
            details={"resource": resource, "id": resource_id}
        )


class ArgumentError(AppException):
    """Invalid argument passed to an operation."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            exit_code=EXIT_USAGE,
            details=details
        )


class ConfigError(AppException):
    """Invalid configuration, config file or command-line range."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(
            message=message,
            exit_code=EXIT_USAGE,
            details=details
        )


class MaskFormatError(AppException):
    """Malformed mask file."""

    def __init__(
        self,
        message: str,
        offset: Optional[int] = None,
        line: Optional[int] = None,
        source: Optional[str] = None
    ):
        details: Dict[str, Any] = {}
        location = ""
        if offset is not None:
            details["offset"] = offset
            location = f" at byte {offset}"
        if line is not None:
            details["line"] = line
            location = f" at line {line}"
        if source is not None:
            details["source"] = source
        super().__init__(
            message=f"{message}{location}",
            exit_code=EXIT_DATA_FAILURE,
            details=details
        )
        self.offset = offset
        self.line = line


class TableFormatError(AppException):
    """Malformed CSV table (error matrix, histogram, bubble table)."""

    def __init__(self, message: str, source: Optional[str] = None, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        if source is not None:
            details["source"] = source
            message = f"{message} in {source}"
        super().__init__(
            message=message,
            exit_code=EXIT_DATA_FAILURE,
            details=details
        )


class MaskValidationError(ArgumentError):
    """Mask construction violates the mask invariants."""


class DimensionMismatchError(ArgumentError):
    """Two masks that must be compared pixelwise differ in shape."""

    def __init__(self, left: Tuple[int, int], right: Tuple[int, int], pair: Optional[str] = None):
        message = f"Mask dimensions differ: {left[1]}x{left[0]} vs {right[1]}x{right[0]}"
        if pair:
            message = f"{message} ({pair})"
        super().__init__(
            message=message,
            details={"left_shape": list(left), "right_shape": list(right), "pair": pair}
        )


class SimulationError(ArgumentError):
    """Simulation parameters do not describe a valid cell."""


class CalibrationError(ArgumentError):
    """Experimental data cannot be matched against the error matrix."""


def to_exit_code(exc: BaseException) -> int:
    """Convert an exception into the CLI exit-code contract."""
    if isinstance(exc, AppException):
        return exc.exit_code
    if isinstance(exc, PydanticValidationError):
        return EXIT_USAGE
    return EXIT_DATA_FAILURE


def config_error_from(exc: PydanticValidationError) -> ConfigError:
    """Wrap a pydantic validation failure raised while building a config."""
    errors = [
        {"field": ".".join(str(part) for part in err["loc"]), "message": err["msg"]}
        for err in exc.errors()
    ]
    summary = "; ".join(f"{err['field']}: {err['message']}" if err["field"] else err["message"] for err in errors)
    return ConfigError(f"Invalid configuration: {summary}", details={"errors": errors})
