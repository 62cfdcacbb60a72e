import pytest

from services import latency_service
from services.latency_service import latency_benchmark, WARMUP_ITERATIONS
from utils.error_handlers import DomainError, NumericError


def test_counts_warmup_and_timed_calls():
    calls = []
    stats = latency_benchmark(calls.append, 'clip', iterations=12, window_seconds=2.0)
    assert len(calls) == WARMUP_ITERATIONS + 12
    assert stats.iterations == 12
    assert stats.min_ms <= stats.p50_ms <= stats.p95_ms <= stats.max_ms
    assert stats.real_time_factor == pytest.approx(2000.0 / stats.mean_ms)


def test_stats_dictionary():
    stats = latency_benchmark(lambda clip: sum(range(100)), None, iterations=10)
    assert set(stats.to_dict()) == {
        'mean_ms', 'p50_ms', 'p95_ms', 'min_ms', 'max_ms', 'iterations', 'throughput_per_s', 'real_time_factor'
    }


def test_too_few_iterations():
    with pytest.raises(DomainError):
        latency_benchmark(lambda clip: None, None, iterations=9)


def test_concurrent_benchmark_is_refused():
    latency_service._benchmark_lock.acquire()
    try:
        with pytest.raises(NumericError):
            latency_benchmark(lambda clip: None, None, iterations=10)
    finally:
        latency_service._benchmark_lock.release()


def test_lock_is_released_after_pipeline_error():
    def broken(clip):
        raise RuntimeError('boom')

    with pytest.raises(RuntimeError):
        latency_benchmark(broken, None, iterations=10)
    assert latency_benchmark(lambda clip: None, None, iterations=10).iterations == 10
