import os
import logging
import logging.handlers
from typing import Optional

logger = logging.getLogger(__name__)

FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(
    log_filename: Optional[str] = None, level: str = "INFO", log_dir: str = "logs"
):
    """Sets up logging with console streaming and optional file logging."""
    formatter = logging.Formatter(FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Handlers installed by an earlier call are replaced, not stacked
    for handler in list(root_logger.handlers):
        if getattr(handler, "_kernelcast", False):
            root_logger.removeHandler(handler)
            handler.close()

    # Console handler (always present)
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    console_handler._kernelcast = True
    root_logger.addHandler(console_handler)

    # File handler (optional)
    if log_filename:
        os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            os.path.join(log_dir, log_filename), maxBytes=5 * 1024 * 1024, backupCount=5
        )
        file_handler.setFormatter(formatter)
        file_handler._kernelcast = True
        root_logger.addHandler(file_handler)
