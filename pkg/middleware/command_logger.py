import time
import uuid
import logging
from functools import wraps
import click
from config import Config
from utils.logging_config import get_logger


def generate_run_id():
    """Generate a unique run ID"""
    return str(uuid.uuid4())[:8]


def current_run_id() -> str:
    ctx = click.get_current_context(silent=True)
    while ctx is not None:
        if isinstance(ctx.obj, dict) and 'run_id' in ctx.obj:
            return ctx.obj['run_id']
        ctx = ctx.parent
    return 'unknown'


def log_command(command_name):
    """Decorator to log CLI command entry, completion and timing"""
    def decorator(f):
        @wraps(f)
        def decorated_function(*args, **kwargs):
            run_id = current_run_id()
            logger = get_logger('cli')
            start_time = time.perf_counter()

            # Truncate long parameter values
            shown = {k: str(v)[:100] + '...' if len(str(v)) > 100 else v for k, v in kwargs.items()}
            logger.info(f"COMMAND_START - ID: {run_id} - {command_name} - Params: {shown}")

            try:
                result = f(*args, **kwargs)
            except Exception as e:
                elapsed_ms = (time.perf_counter() - start_time) * 1000
                logger.error(
                    f"COMMAND_FAILED - ID: {run_id} - {command_name} - "
                    f"Time: {elapsed_ms:.2f}ms - Error: {str(e)}",
                    extra={'run_id': run_id, 'command': command_name, 'elapsed_ms': elapsed_ms}
                )
                raise

            elapsed_ms = (time.perf_counter() - start_time) * 1000
            logger.info(
                f"COMMAND_COMPLETE - ID: {run_id} - {command_name} - Time: {elapsed_ms:.2f}ms",
                extra={'run_id': run_id, 'command': command_name, 'elapsed_ms': elapsed_ms}
            )

            # Log slow commands
            if elapsed_ms > Config.SLOW_COMMAND_MS:
                logger.warning(f"SLOW_COMMAND - ID: {run_id} - {command_name} - Time: {elapsed_ms:.2f}ms")

            return result

        return decorated_function
    return decorator


def log_stage(stage_logger: logging.Logger, stage: str, **fields):
    """Log a pipeline stage event in the shared `EVENT - Key: value` register"""
    parts = [f"{stage.upper()} - ID: {current_run_id()}"]
    for key, value in fields.items():
        parts.append(f"{key.replace('_', ' ').capitalize()}: {value}")
    stage_logger.info(" - ".join(parts))
