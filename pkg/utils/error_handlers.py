import json
import logging
import traceback
from typing import Any, Dict, Optional
import click
from utils.logging_config import get_logger

# Get specialized loggers
logger = get_logger('error_handler')

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class GammasonarError(Exception):
    """Base error carrying a CLI exit code and a stable error code"""
    exit_code = EXIT_UNEXPECTED
    default_error_code = 'INTERNAL_ERROR'

    def __init__(self, message: str, error_code: str = None, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.error_code = error_code or self.default_error_code
        self.details = details or {}
        super().__init__(self.message)


class ConfigError(GammasonarError):
    exit_code = EXIT_CONFIG
    default_error_code = 'CONFIG_ERROR'


class DomainError(GammasonarError, ValueError):
    exit_code = EXIT_CONFIG
    default_error_code = 'DOMAIN_ERROR'


class AliasingError(DomainError):
    default_error_code = 'ALIASING'


class SampleRateMismatchError(GammasonarError, ValueError):
    exit_code = EXIT_CONFIG
    default_error_code = 'SAMPLE_RATE_MISMATCH'


class ShapeError(GammasonarError, ValueError):
    exit_code = EXIT_NUMERIC
    default_error_code = 'SHAPE_MISMATCH'


class AudioIOError(GammasonarError):
    exit_code = EXIT_IO
    default_error_code = 'AUDIO_IO'


class MalformedWavError(AudioIOError):
    default_error_code = 'MALFORMED_WAV'


class UnsupportedCodecError(AudioIOError):
    default_error_code = 'UNSUPPORTED_CODEC'


class EmptyAudioError(AudioIOError):
    default_error_code = 'EMPTY_AUDIO'


class MissingAudioError(AudioIOError, FileNotFoundError):
    default_error_code = 'MISSING_AUDIO'


class DatasetError(GammasonarError):
    exit_code = EXIT_IO
    default_error_code = 'DATASET_ERROR'


class FeatureFileError(GammasonarError):
    exit_code = EXIT_IO
    default_error_code = 'FEATURE_FILE'


class CheckpointError(GammasonarError):
    exit_code = EXIT_IO
    default_error_code = 'CHECKPOINT'


class CheckpointFormatError(CheckpointError):
    default_error_code = 'CHECKPOINT_BAD_MAGIC'


class CheckpointVersionError(CheckpointError):
    default_error_code = 'CHECKPOINT_VERSION'


class CheckpointTruncatedError(CheckpointError):
    default_error_code = 'CHECKPOINT_TRUNCATED'


class NumericError(GammasonarError):
    exit_code = EXIT_NUMERIC
    default_error_code = 'NUMERIC_ERROR'


class DivergenceError(NumericError):
    default_error_code = 'DIVERGENCE'

    def __init__(self, message: str, epoch: int, batch: int, details: Optional[Dict[str, Any]] = None):
        self.epoch = epoch
        self.batch = batch
        merged = {'epoch': epoch, 'batch': batch}
        merged.update(details or {})
        super().__init__(message, details=merged)


class MetricsError(GammasonarError, ValueError):
    exit_code = EXIT_NUMERIC
    default_error_code = 'METRIC_UNDEFINED'


def create_error_payload(error: Exception, command: str = None, run_id: str = None) -> Dict[str, Any]:
    """Create standardized error document for stderr and logs"""
    if isinstance(error, GammasonarError):
        message, error_code, exit_code, details = error.message, error.error_code, error.exit_code, error.details
    else:
        message = "An unexpected error occurred"
        error_code = 'INTERNAL_ERROR'
        exit_code = EXIT_UNEXPECTED
        details = {'error_type': type(error).__name__}
        if logger.isEnabledFor(logging.DEBUG):
            details['error'] = str(error)

    error_data = {
        'error': {
            'message': message,
            'error_code': error_code,
            'exit_code': exit_code,
            'command': command or 'unknown',
            'run_id': run_id or 'unknown'
        }
    }
    if details:
        error_data['error']['details'] = details
    return error_data


def handle_gammasonar_error(error: GammasonarError, command: str = None, run_id: str = None) -> int:
    """Log a known error with context and return its exit code"""
    logger.error(
        f"COMMAND_ERROR - ID: {run_id} - Command: {command} - "
        f"Code: {error.error_code} - Exit: {error.exit_code} - Message: {error.message}"
    )
    return error.exit_code


def handle_os_error(error: OSError, command: str = None, run_id: str = None) -> int:
    """File-system errors map to the I/O exit code"""
    logger.error(
        f"IO_ERROR - ID: {run_id} - Command: {command} - "
        f"Path: {getattr(error, 'filename', None)} - Error: {str(error)}"
    )
    return EXIT_IO


def handle_generic_error(error: Exception, command: str = None, run_id: str = None) -> int:
    """Handle unexpected errors with comprehensive logging"""
    logger.error(
        f"UNEXPECTED_ERROR - ID: {run_id} - Command: {command} - "
        f"Error: {str(error)} - Type: {type(error).__name__}"
    )
    logger.error(f"TRACEBACK - ID: {run_id} - {traceback.format_exc()}")
    return EXIT_UNEXPECTED


def handle_cli_error(error: Exception, command: str = None, run_id: str = None) -> int:
    """Dispatch to the matching handler, print the error document, return the exit code"""
    if isinstance(error, GammasonarError):
        exit_code = handle_gammasonar_error(error, command, run_id)
        payload = create_error_payload(error, command, run_id)
    elif isinstance(error, OSError):
        exit_code = handle_os_error(error, command, run_id)
        payload = create_error_payload(
            AudioIOError(str(error), error_code='IO_ERROR', details={'path': str(getattr(error, 'filename', ''))}),
            command, run_id
        )
    else:
        exit_code = handle_generic_error(error, command, run_id)
        payload = create_error_payload(error, command, run_id)

    click.echo(json.dumps(payload, sort_keys=True), err=True)
    return exit_code


def register_error_handlers(group: click.Group):
    """Route every subcommand of the click group through handle_cli_error"""
    original_invoke = group.invoke

    def invoke(ctx: click.Context):
        try:
            return original_invoke(ctx)
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except Exception as e:
            command = ctx.invoked_subcommand
            run_id = (ctx.obj or {}).get('run_id') if isinstance(ctx.obj, dict) else None
            ctx.exit(handle_cli_error(e, command, run_id))

    group.invoke = invoke
    logger.debug("CLI error handlers registered")
    return group
