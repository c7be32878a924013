"""Точка входа для запуска через python -m cli."""
import logging
import sys

from cli.app import cli

if __name__ == "__main__":
    logger = logging.getLogger(__name__)
    try:
        cli(prog_name="slconvex")
    except KeyboardInterrupt:
        logger.info("Остановлено пользователем")
        sys.exit(130)
