"""
Per-sample latency benchmarking on a monotonic clock, pinned to one thread
"""

import threading
import time
from typing import Callable, Any
import numpy as np
from threadpoolctl import threadpool_limits

from models.eval_models import LatencyStats
from utils.error_handlers import DomainError, NumericError
from utils.logging_config import get_logger

logger = get_logger('latency')

WARMUP_ITERATIONS = 10
MIN_ITERATIONS = 10

_benchmark_lock = threading.Lock()


def latency_benchmark(pipeline: Callable[[Any], Any], clip: Any, iterations: int = 50,
                      window_seconds: float = 4.0, label: str = 'end_to_end') -> LatencyStats:
    """
    Time `pipeline(clip)`: 10 untimed warmup calls, then `iterations` timed calls.
    Only one benchmark may run per process at a time.
    """
    if iterations < MIN_ITERATIONS:
        raise DomainError(f"Latency benchmark needs at least {MIN_ITERATIONS} iterations, got {iterations}")
    if not _benchmark_lock.acquire(blocking=False):
        raise NumericError("Another latency benchmark is already running in this process")
    try:
        with threadpool_limits(limits=1):
            for _ in range(WARMUP_ITERATIONS):
                pipeline(clip)
            timings = np.empty(iterations)
            for i in range(iterations):
                start = time.perf_counter()
                pipeline(clip)
                timings[i] = (time.perf_counter() - start) * 1000.0
    finally:
        _benchmark_lock.release()

    stats = LatencyStats(
        mean_ms=float(timings.mean()),
        p50_ms=float(np.percentile(timings, 50)),
        p95_ms=float(np.percentile(timings, 95)),
        min_ms=float(timings.min()),
        max_ms=float(timings.max()),
        iterations=iterations,
        window_seconds=window_seconds
    )
    logger.info(
        f"LATENCY_MEASURED - Pipeline: {label} - Iterations: {iterations} - Mean: {stats.mean_ms:.2f}ms - "
        f"P50: {stats.p50_ms:.2f}ms - P95: {stats.p95_ms:.2f}ms - RTF: {stats.real_time_factor:.1f}"
    )
    return stats
