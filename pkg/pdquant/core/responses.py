import logging
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import ValidationError

from .. import __version__
from ..schemas.manifest import RunManifest
from .exceptions import EXIT_DATA_FAILURE, EXIT_OK, AppException, ConfigError

logger = logging.getLogger(__name__)


def error_response(
    message: str,
    source: Optional[str] = None,
    details: Optional[Dict[str, Any]] = None,
    exit_code: int = EXIT_DATA_FAILURE
) -> Dict[str, Any]:
    """Create a per-input error entry."""
    return {
        "source": source,
        "message": message,
        "details": details or {},
        "exit_code": exit_code
    }


def error_from_exception(exc: BaseException, source: Optional[str] = None) -> Dict[str, Any]:
    if isinstance(exc, AppException):
        return error_response(exc.message, source, exc.details, exc.exit_code)
    return error_response(str(exc) or type(exc).__name__, source)


class RunRecorder:
    """Collects inputs, outputs and failures of one command run into its manifest."""

    def __init__(self, command: str, output_dir: Union[str, Path], workers: int = 1):
        self.command = command
        self.output_dir = Path(output_dir)
        self.workers = workers
        self.config: Dict[str, Any] = {}
        self.arguments: Dict[str, Any] = {}
        self.seed: Optional[int] = None
        self.inputs: List[str] = []
        self.outputs: List[str] = []
        self.errors: List[Dict[str, Any]] = []
        self.started_at = datetime.now(timezone.utc)
        self._clock = time.perf_counter()

    def output_path(self, name: str) -> Path:
        return self.output_dir / name

    def add_input(self, path: Union[str, Path]):
        self.inputs.append(str(path))

    def add_output(self, path: Union[str, Path]) -> Path:
        self.outputs.append(str(path))
        logger.info(f"📄 Wrote {path}")
        return Path(path)

    def record_error(self, exc: BaseException, source: Optional[str] = None):
        entry = error_from_exception(exc, source)
        self.errors.append(entry)
        logger.error(f"❌ {source + ': ' if source else ''}{entry['message']}")

    @property
    def exit_code(self) -> int:
        return EXIT_DATA_FAILURE if self.errors else EXIT_OK

    def manifest(self, exit_code: Optional[int] = None) -> RunManifest:
        return RunManifest(
            command=self.command,
            tool_version=__version__,
            config=self.config,
            arguments=self.arguments,
            inputs=self.inputs,
            seed=self.seed,
            outputs=self.outputs,
            errors=self.errors,
            exit_code=self.exit_code if exit_code is None else exit_code,
            started_at=self.started_at,
            elapsed_seconds=time.perf_counter() - self._clock,
            workers=self.workers,
        )

    def write_manifest(self, exit_code: Optional[int] = None) -> Path:
        path = self.output_path(f"{self.command}_manifest.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        manifest = self.manifest(exit_code)
        path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info(f"🧾 Manifest {path} (exit code {manifest.exit_code}, {manifest.elapsed_seconds:.2f} s)")
        return path


def load_manifest(path: Union[str, Path]) -> RunManifest:
    """Read a manifest written by ``RunRecorder.write_manifest``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Manifest not found: {path}", details={"path": str(path)})
    try:
        return RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise ConfigError(f"Invalid manifest {path}: {exc.errors()[0]['msg']}", details={"path": str(path)})
