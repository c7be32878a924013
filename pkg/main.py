import logging
import sys

import config
from cli.app import cli

logger = logging.getLogger(__name__)

if __name__ == "__main__":
    logger.debug(f"🚀 Запуск {config.TOOL_NAME} {config.TOOL_VERSION}")
    try:
        cli(prog_name=config.TOOL_NAME)
    except KeyboardInterrupt:
        logger.info("🛑 Остановлено пользователем")
        sys.exit(130)
