import sys
from typing import Optional, Sequence

from loguru import logger

from ..config import load_config
from ..errors import BaguanError, UsageError
from .commands import HANDLERS
from .parser import build_parser, overrides

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

_console_sink: Optional[int] = None


def _configure_console(level: str) -> None:
    global _console_sink
    if _console_sink is None:
        try:
            logger.remove(0)
        except ValueError:
            pass
    else:
        logger.remove(_console_sink)
    _console_sink = logger.add(sys.stderr, level=level)


def _stage_section(args) -> str:
    if args.command == "pretrain":
        return "pretrain"
    if args.command == "finetune":
        return "finetune" if args.stage == 2 else "rolling"
    return ""


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse, resolve the configuration, run one command; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
    except UsageError as e:
        print(f"{e}\n{parser.format_usage()}", file=sys.stderr, end="")
        return EXIT_USAGE
    except SystemExit as e:
        # --help and --version
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE

    _configure_console(args.log_level)
    try:
        run = load_config(args.config, overrides(args, _stage_section(args)))
        logger.info(f"Running {args.command}")
        HANDLERS[args.command](args, run)
    except UsageError as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (BaguanError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_RUNTIME
    logger.info(f"{args.command} finished")
    return EXIT_OK


def run() -> None:
    sys.exit(main())
