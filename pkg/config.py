import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ('1', 'true', 'yes', 'on')


class Config:
    """Process-level configuration read from the environment"""

    # Environment
    APP_ENV = os.getenv('APP_ENV', 'development')

    # Logging
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOGS_DIR = os.getenv('LOGS_DIR', 'logs')
    LOG_FILE = os.getenv('LOG_FILE', 'gammasonar.log')
    LOG_FILE_MAX_BYTES = os.getenv('LOG_FILE_MAX_BYTES', '1000000')
    LOG_FILE_BACKUP_COUNT = os.getenv('LOG_FILE_BACKUP_COUNT', '10')
    LOG_FILE_ROTATE = os.getenv('LOG_FILE_ROTATE', 'size')
    LOG_FILE_ENCODING = os.getenv('LOG_FILE_ENCODING', 'utf-8')
    LOG_DATE_FORMAT = os.getenv('LOG_DATE_FORMAT', '%Y-%m-%d %H:%M:%S')
    LOG_FORMAT = os.getenv('LOG_FORMAT', 'text')
    LOG_TO_FILE = _env_bool('LOG_TO_FILE', 'true')

    # Data locations
    DATA_DIR = os.getenv('DATA_DIR', 'data')
    FEATURES_DIR = os.getenv('FEATURES_DIR', 'features')
    CHECKPOINT_DIR = os.getenv('CHECKPOINT_DIR', 'checkpoints')

    # Workers
    EXTRACT_WORKERS = int(os.getenv('EXTRACT_WORKERS', str(os.cpu_count() or 1)))

    # Commands slower than this are reported
    SLOW_COMMAND_MS = float(os.getenv('SLOW_COMMAND_MS', '600000'))

    VALID_ENVIRONMENTS = ('development', 'production', 'testing', 'staging')
    VALID_LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')

    @staticmethod
    def requested_log_level():
        """LOG_LEVEL as currently set in the environment, None when unset"""
        return os.getenv('LOG_LEVEL') or None

    @classmethod
    def validate(cls):
        """Validate process configuration"""
        if cls.APP_ENV.lower() not in cls.VALID_ENVIRONMENTS:
            raise ValueError(
                f"APP_ENV must be one of {', '.join(cls.VALID_ENVIRONMENTS)}, got '{cls.APP_ENV}'"
            )
        level = cls.requested_log_level() or cls.LOG_LEVEL
        if level.upper() not in cls.VALID_LOG_LEVELS:
            raise ValueError(
                f"LOG_LEVEL must be one of {', '.join(cls.VALID_LOG_LEVELS)}, got '{level}'"
            )
        if cls.LOG_FILE_ROTATE.lower() not in ('size', 'daily'):
            raise ValueError(f"LOG_FILE_ROTATE must be 'size' or 'daily', got '{cls.LOG_FILE_ROTATE}'")
        if cls.LOG_FORMAT.lower() not in ('text', 'json'):
            raise ValueError(f"LOG_FORMAT must be 'text' or 'json', got '{cls.LOG_FORMAT}'")
        if cls.EXTRACT_WORKERS < 1:
            raise ValueError("EXTRACT_WORKERS must be at least 1")
        return True
