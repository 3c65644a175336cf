import logging
import sys
from datetime import datetime

from config import LOG_LEVEL

STATUS_ICONS = {
    'success': '✅',
    'error': '❌',
    'info': '⏳',
}


def setup_logger(level=None):
    logging.basicConfig(
        level=getattr(logging, (level or LOG_LEVEL), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    return logging.getLogger('lspm')


logger = setup_logger()


def log_status(message, status="info"):
    """
    Log a progress line with a status icon and keep it for the run summary.
    """
    timestamp = datetime.now().strftime("%H:%M:%S")
    icon = STATUS_ICONS.get(status, STATUS_ICONS['info'])
    line = f"{icon} [{timestamp}] {message}"
    if status == 'error':
        logger.error(message)
    else:
        logger.info(message)
    return line
