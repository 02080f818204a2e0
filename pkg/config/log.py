"""Loguru sink setup shared by the CLI and scripts."""
import sys
from typing import Optional

from loguru import logger

from .settings import settings


def setup_logging(level: Optional[str] = None) -> None:
    """Replace loguru's default sink with a single stderr sink."""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.log_level).upper(),
        format=settings.log_format,
        colorize=settings.log_colorize,
    )
