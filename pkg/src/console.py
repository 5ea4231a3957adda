import logging

import rich.console
import rich.logging
import rich.theme

theme = rich.theme.Theme(
    {
        "info": "cyan",
        "danger": "bold red",
        "warning": "bold yellow",
        "success": "bold green",
    }
)
console = rich.console.Console(theme=theme)
err_console = rich.console.Console(theme=theme, stderr=True)


def configure_logging(verbose: int = 0) -> None:
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[rich.logging.RichHandler(console=err_console, show_path=False)],
        force=True,
    )
