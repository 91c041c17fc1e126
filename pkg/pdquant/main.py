import logging
import sys
from typing import Optional, Sequence

from .api.commands import build_parser, run_command
from .core.config import settings
from .core.exceptions import EXIT_USAGE, to_exit_code

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

logger = logging.getLogger(__name__)


def configure_logging(level: Optional[str] = None):
    """Configure root logging on stderr, plus a file when ``log_file`` is set."""
    level = (level or settings.log_level).upper()
    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.log_file:
        handlers.append(logging.FileHandler(settings.log_file, encoding="utf-8"))
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT, handlers=handlers)
    logging.getLogger().setLevel(getattr(logging, level, logging.INFO))
    # matplotlib's font manager is noisy at DEBUG
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version and 2 for usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE

    configure_logging(args.log_level)
    logger.info(f"🚀 Starting {settings.app_name} {args.command}...")
    try:
        exit_code = run_command(args)
    except Exception as exc:
        logger.exception(f"Unhandled exception: {exc}")
        exit_code = to_exit_code(exc)

    if exit_code == 0:
        logger.info(f"✅ {args.command} finished successfully")
    else:
        logger.info(f"🛑 {args.command} finished with exit code {exit_code}")
    return exit_code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
