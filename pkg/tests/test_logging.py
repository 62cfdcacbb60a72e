import logging
import pytest
from click.testing import CliRunner

from app import cli
from config import Config
from utils.env_logging import setup_environment_logging, configure_environment_loggers

PATCHED = ('APP_ENV', 'LOG_LEVEL', 'LOG_TO_FILE', 'LOG_FILE_ROTATE', 'LOG_FILE_MAX_BYTES', 'LOG_FILE_BACKUP_COUNT')


@pytest.fixture
def logging_state(monkeypatch):
    """Restore Config and the testing logger setup afterwards"""
    for name in PATCHED:
        monkeypatch.setattr(Config, name, getattr(Config, name))
    monkeypatch.setattr(Config, 'LOG_TO_FILE', False)
    monkeypatch.delenv('LOG_LEVEL', raising=False)
    yield monkeypatch
    monkeypatch.undo()
    setup_environment_logging()
    configure_environment_loggers()


def configure(level_override=None):
    setup_environment_logging(level_override)
    configure_environment_loggers(level_override)


def test_development_defaults(logging_state):
    logging_state.setattr(Config, 'APP_ENV', 'development')
    configure()
    assert Config.LOG_LEVEL == 'DEBUG'
    assert logging.getLogger().level == logging.DEBUG
    assert logging.getLogger('training').level == logging.INFO
    assert logging.getLogger('features').level == logging.DEBUG


def test_log_level_env_var_beats_environment_default(logging_state):
    logging_state.setattr(Config, 'APP_ENV', 'development')
    logging_state.setenv('LOG_LEVEL', 'ERROR')
    configure()
    assert Config.LOG_LEVEL == 'ERROR'
    assert logging.getLogger().level == logging.ERROR
    assert logging.getLogger('training').level == logging.ERROR
    assert logging.getLogger('cli').level == logging.ERROR


def test_command_line_level_beats_env_var(logging_state):
    logging_state.setattr(Config, 'APP_ENV', 'production')
    logging_state.setenv('LOG_LEVEL', 'WARNING')
    configure('debug')
    assert Config.LOG_LEVEL == 'DEBUG'
    assert logging.getLogger('audio').level == logging.DEBUG
    assert Config.LOG_FILE_ROTATE == 'daily'


def test_production_component_levels(logging_state):
    logging_state.setattr(Config, 'APP_ENV', 'production')
    configure()
    assert logging.getLogger().level == logging.INFO
    assert logging.getLogger('features').level == logging.WARNING
    assert logging.getLogger('error_handler').level == logging.ERROR
    assert logging.getLogger('matplotlib').level == logging.ERROR


def test_testing_environment_is_quiet(logging_state):
    logging_state.setattr(Config, 'APP_ENV', 'testing')
    logging_state.setattr(Config, 'LOG_TO_FILE', True)
    configure()
    assert Config.LOG_LEVEL == 'WARNING'
    assert Config.LOG_TO_FILE is False
    assert logging.getLogger('feature_cache').level == logging.ERROR


def test_unknown_environment_logs_like_development(logging_state):
    logging_state.setattr(Config, 'APP_ENV', 'qa')
    configure()
    assert Config.LOG_LEVEL == 'DEBUG'


def test_invalid_log_level_env_var_is_rejected(logging_state, tmp_path):
    logging_state.setenv('LOG_LEVEL', 'LOUD')
    result = CliRunner().invoke(cli, ['filterbank', '--out-dir', str(tmp_path)])
    assert result.exit_code == 2
    assert 'LOG_LEVEL' in result.output


def test_invalid_log_level_option_is_rejected(tmp_path):
    result = CliRunner().invoke(cli, ['--log-level', 'loud', 'filterbank', '--out-dir', str(tmp_path)])
    assert result.exit_code == 2
