import logging
import sys

import click

import config
from cli.handlers import register_commands

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


@click.group()
@click.version_option(config.TOOL_VERSION, prog_name=config.TOOL_NAME)
@click.option("--log-level", default=None,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              help="Уровень логирования (логи пишутся в stderr).")
def cli(log_level: str | None):
    """Проверка выпуклости изотропных энергий на SL(2) и в GL+(2)."""
    level = (log_level or config.LOG_LEVEL).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )
    logger.debug(f"Уровень логирования: {level}")


register_commands(cli)
