import logging
from config import Config
from utils.logging_config import setup_logging, get_logger

COMPONENTS = ('cli', 'filterbank', 'features', 'audio', 'synth', 'dataset', 'cnn', 'training',
              'checkpoint', 'metrics', 'latency', 'feature_cache', 'pipeline', 'error_handler')

# Handler settings per environment; the level applies only when none is requested explicitly
ENVIRONMENT_SETTINGS = {
    'development': {
        'level': 'DEBUG',
        'rotate': 'size',
        'max_bytes': '500000',
        'backups': '5',
    },
    'production': {
        'level': 'INFO',
        'rotate': 'daily',
        'max_bytes': '10000000',
        'backups': '30',
        'quiet': ('matplotlib',),
    },
    'staging': {
        'level': 'INFO',
        'rotate': 'daily',
        'max_bytes': '5000000',
        'backups': '14',
    },
    'testing': {
        'level': 'WARNING',
        'to_file': False,
        'quiet': ('matplotlib',),
    },
}

# Component levels under the environment default; components not listed follow the root level
ENVIRONMENT_LOG_LEVELS = {
    'development': {'training': 'INFO'},
    'production': {
        'features': 'WARNING',
        'audio': 'WARNING',
        'feature_cache': 'WARNING',
        'error_handler': 'ERROR',
    },
    'staging': {'error_handler': 'WARNING'},
    'testing': {'feature_cache': 'ERROR', 'error_handler': 'ERROR'},
}


def current_environment() -> str:
    env = Config.APP_ENV.lower()
    # Unrecognized environments log like development
    return env if env in ENVIRONMENT_SETTINGS else 'development'


def explicit_log_level(level_override: str = None):
    """--log-level first, then LOG_LEVEL from the environment; None when neither is given"""
    requested = level_override or Config.requested_log_level()
    return requested.upper() if requested else None


def setup_environment_logging(level_override: str = None):
    """Apply the environment's handler settings, then the explicit level if one was requested"""
    env = current_environment()
    settings = ENVIRONMENT_SETTINGS[env]

    Config.LOG_LEVEL = explicit_log_level(level_override) or settings['level']
    if 'rotate' in settings:
        Config.LOG_FILE_ROTATE = settings['rotate']
        Config.LOG_FILE_MAX_BYTES = settings['max_bytes']
        Config.LOG_FILE_BACKUP_COUNT = settings['backups']
    if settings.get('to_file') is False:
        Config.LOG_TO_FILE = False

    setup_logging()
    for name in settings.get('quiet', ()):
        logging.getLogger(name).setLevel(logging.ERROR)

    env_logger = get_logger(env)
    env_logger.debug(f"LOGGING_CONFIGURED - Environment: {env} - Level: {Config.LOG_LEVEL} - "
                     f"Rotation: {Config.LOG_FILE_ROTATE} - Files: {Config.LOG_TO_FILE}")
    return env_logger


def configure_environment_loggers(level_override: str = None):
    """Per-component levels for the environment, or one level everywhere when it was requested"""
    explicit = explicit_log_level(level_override)
    overrides = {} if explicit else ENVIRONMENT_LOG_LEVELS[current_environment()]

    for name in COMPONENTS:
        logging.getLogger(name).setLevel(getattr(logging, overrides.get(name, Config.LOG_LEVEL).upper()))
