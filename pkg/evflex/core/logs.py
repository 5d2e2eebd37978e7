import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
import os
import sys


logger = logging.getLogger("evflex")


# Different configs for dev vs prod
ENV = os.getenv("EVFLEX_ENV", "development")

if ENV == "production":
    LOG_LEVEL = logging.INFO
    LOG_DIR = Path(os.getenv("EVFLEX_LOG_DIR", "/var/log/evflex"))
else:
    LOG_LEVEL = logging.DEBUG
    LOG_DIR = Path(os.getenv("EVFLEX_LOG_DIR", Path(__file__).parent / "logs"))

try:
    LOG_DIR.mkdir(parents=True, exist_ok=True)
except OSError:
    print(f"WARNING: Cannot create log directory {LOG_DIR}, using console only",
          file=sys.stderr)
    LOG_DIR = None

if not logger.handlers:
    fmt = "%(asctime)s [%(levelname)s] %(filename)s:%(lineno)d - %(funcName)s() - %(message)s"
    datefmt = "%Y-%m-%d %H:%M:%S"
    formatter = logging.Formatter(fmt=fmt, datefmt=datefmt)

    if LOG_DIR is not None:
        file_handler = RotatingFileHandler(
            str(LOG_DIR / "evflex.log"), maxBytes=10 * 1024 * 1024, backupCount=5, encoding="utf-8"
        )
        file_handler.setLevel(LOG_LEVEL)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.WARNING)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

logger.setLevel(LOG_LEVEL)
logger.propagate = False
