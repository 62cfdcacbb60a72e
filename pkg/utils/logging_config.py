import os
import json
import logging
import logging.handlers
from datetime import datetime
from config import Config


class ColoredFormatter(logging.Formatter):
    """Custom formatter with colors for console output"""

    # Color codes
    COLORS = {
        'DEBUG': '\033[36m',      # Cyan
        'INFO': '\033[32m',       # Green
        'WARNING': '\033[33m',    # Yellow
        'ERROR': '\033[31m',      # Red
        'CRITICAL': '\033[35m',   # Magenta
        'RESET': '\033[0m'        # Reset
    }

    def format(self, record):
        # Color a copy so file handlers sharing the record keep the plain name
        original = record.levelname
        if original in self.COLORS:
            record.levelname = f"{self.COLORS[original]}{original}{self.COLORS['RESET']}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


class StructuredFormatter(logging.Formatter):
    """Structured formatter emitting one JSON object per record"""

    EXTRA_FIELDS = ('run_id', 'command', 'epoch', 'batch', 'path', 'elapsed_ms')

    def format(self, record):
        log_entry = {
            'timestamp': datetime.fromtimestamp(record.created).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno
        }

        # Add exception info if present
        if record.exc_info:
            log_entry['exception'] = self.formatException(record.exc_info)

        for field in self.EXTRA_FIELDS:
            if hasattr(record, field):
                log_entry[field] = getattr(record, field)

        return json.dumps(log_entry, default=str)


def _file_handler(path: str, rotate: str) -> logging.Handler:
    if rotate.lower() == 'daily':
        return logging.handlers.TimedRotatingFileHandler(
            path,
            when='midnight',
            interval=1,
            backupCount=int(Config.LOG_FILE_BACKUP_COUNT),
            encoding=Config.LOG_FILE_ENCODING
        )
    return logging.handlers.RotatingFileHandler(
        path,
        maxBytes=int(Config.LOG_FILE_MAX_BYTES),
        backupCount=int(Config.LOG_FILE_BACKUP_COUNT),
        encoding=Config.LOG_FILE_ENCODING
    )


def setup_logging():
    """Setup console, rotating file, error file and training log handlers"""

    # Get root logger
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, Config.LOG_LEVEL.upper()))

    # Clear any existing handlers
    root_logger.handlers.clear()

    console_formatter = ColoredFormatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt=Config.LOG_DATE_FORMAT
    )

    if Config.LOG_FORMAT.lower() == 'json':
        file_formatter = StructuredFormatter()
    else:
        file_formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(module)s:%(funcName)s:%(lineno)d - %(message)s',
            datefmt=Config.LOG_DATE_FORMAT
        )

    # Console handler (always present)
    console_handler = logging.StreamHandler()
    console_handler.setLevel(getattr(logging, Config.LOG_LEVEL.upper()))
    console_handler.setFormatter(console_formatter)
    root_logger.addHandler(console_handler)

    training_logger = logging.getLogger('training')
    training_logger.handlers.clear()

    if not Config.LOG_TO_FILE:
        training_logger.propagate = True
        configure_loggers()
        return root_logger

    # Create logs directory if it doesn't exist
    os.makedirs(Config.LOGS_DIR, exist_ok=True)

    file_handler = _file_handler(os.path.join(Config.LOGS_DIR, Config.LOG_FILE), Config.LOG_FILE_ROTATE)
    file_handler.setLevel(getattr(logging, Config.LOG_LEVEL.upper()))
    file_handler.setFormatter(file_formatter)
    root_logger.addHandler(file_handler)

    # Error file handler (separate file for errors)
    error_handler = _file_handler(os.path.join(Config.LOGS_DIR, 'error.log'), 'size')
    error_handler.setLevel(logging.ERROR)
    error_handler.setFormatter(file_formatter)
    root_logger.addHandler(error_handler)

    # Training log handler (per-epoch history, kept out of the main log)
    training_handler = _file_handler(os.path.join(Config.LOGS_DIR, 'training.log'), 'size')
    training_handler.setLevel(logging.INFO)
    training_handler.setFormatter(file_formatter)
    training_logger.setLevel(logging.INFO)
    training_logger.addHandler(training_handler)
    training_logger.addHandler(console_handler)
    training_logger.propagate = False  # Don't duplicate into app log

    configure_loggers()

    return root_logger


def configure_loggers():
    """Configure specific loggers for different components"""

    for name in ('cli', 'filterbank', 'features', 'audio', 'synth', 'dataset',
                 'cnn', 'checkpoint', 'metrics', 'latency', 'feature_cache', 'pipeline'):
        logging.getLogger(name).setLevel(getattr(logging, Config.LOG_LEVEL.upper()))

    # Error handler logger
    logging.getLogger('error_handler').setLevel(logging.ERROR)

    # Suppress some noisy loggers
    logging.getLogger('matplotlib').setLevel(logging.WARNING)
    logging.getLogger('numba').setLevel(logging.WARNING)


def get_logger(name):
    """Get a logger instance with the given name"""
    return logging.getLogger(name)
