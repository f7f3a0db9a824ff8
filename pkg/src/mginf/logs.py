"""Console logging setup shared by the CLI and the HTTP server."""

import logging

from rich.console import Console
from rich.logging import RichHandler

_HANDLER_NAME = "mginf-rich"


def configure_logging(level: int | str = logging.WARNING) -> None:
    """
    Route the package's log records to stderr through rich.

    stdout is reserved for CSV/JSON output, so the handler always writes to a
    stderr console. Calling this twice replaces the handler instead of
    stacking a second one.
    """
    root = logging.getLogger("src.mginf")
    for handler in list(root.handlers):
        if handler.get_name() == _HANDLER_NAME:
            root.removeHandler(handler)

    handler = RichHandler(
        console=Console(stderr=True),
        show_path=False,
        rich_tracebacks=True,
    )
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
    root.addHandler(handler)
    root.setLevel(level if isinstance(level, int) else level.upper())
    root.propagate = False
