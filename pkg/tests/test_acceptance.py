"""
End-to-end runs on the synthetic corpus. The desk-scale ones are marked slow;
run them with `pytest -m slow`.
"""

import os
import pytest

from models.audio_models import DEFAULT_PROFILES
from models.run_config import RunConfig
from services.audio_service import segment
from services.cnn_model import build_reference_model
from services.dataset_service import make_dataset
from services.latency_service import latency_benchmark
from services.metrics_service import write_report
from services.pipeline_service import (
    extract_features, train_from_features, evaluate, compare_frontends, end_to_end_pipeline
)
from services.synth_service import synth_vessel

WORKERS = os.cpu_count() or 1


def run_once(directory, run_config):
    manifest = make_dataset(os.path.join(directory, 'data'), per_class=run_config.dataset.per_class,
                            duration=run_config.dataset.duration, seed=run_config.seed)
    features_dir = os.path.join(directory, 'features')
    extract_features(manifest, run_config, features_dir)
    trained = train_from_features(features_dir, run_config)
    report = evaluate(trained.model, features_dir, 'test')
    return write_report(report, os.path.join(directory, 'reports'))['report']


def test_fixed_seed_run_is_byte_identical(tmp_path):
    run_config = RunConfig.from_dict({
        'image_size': [32, 32], 'seed': 11,
        'dataset': {'per_class': 10, 'duration': 1.0, 'segment_window': 1.0},
        'train': {'epochs': 1, 'batch_size': 8, 'seed': 11},
    })
    first = run_once(str(tmp_path / 'one'), run_config)
    second = run_once(str(tmp_path / 'two'), run_config)
    with open(first, 'rb') as a, open(second, 'rb') as b:
        assert a.read() == b.read()


@pytest.mark.slow
def test_desk_scale_classification(tmp_path):
    run_config = RunConfig()
    manifest = make_dataset(str(tmp_path / 'data'), per_class=200, duration=4.0, seed=0, workers=WORKERS)
    features_dir = str(tmp_path / 'features')
    summary = extract_features(manifest, run_config, features_dir, workers=WORKERS)
    assert summary['failed'] == []

    trained = train_from_features(features_dir, run_config)
    report = evaluate(trained.model, features_dir, 'test')
    assert report.accuracy >= 0.9
    assert report.kappa >= 0.85


@pytest.mark.slow
def test_gammatone_beats_mfcc_at_low_snr(tmp_path):
    profiles = [p.with_snr_range(-5.0, 5.0) for p in DEFAULT_PROFILES]
    manifest = make_dataset(str(tmp_path / 'data'), profiles=profiles, per_class=200, duration=4.0,
                            seed=0, workers=WORKERS)
    rows = compare_frontends(manifest, RunConfig(), seeds=range(5), work_dir=str(tmp_path / 'compare'),
                             workers=WORKERS)
    wins = sum(1 for row in rows if row['gammatone'] >= row['mfcc'])
    assert wins >= 4


@pytest.mark.slow
def test_full_size_model_runs_faster_than_real_time():
    run_config = RunConfig().with_overrides(image_size=(224, 224))
    model = build_reference_model((224, 224, 3), seed=0)
    clip = synth_vessel(DEFAULT_PROFILES[1], 4.0, run_config.filterbank.sample_rate, seed=0)
    window = segment(clip, run_config.dataset.segment_window)[0]
    stats = latency_benchmark(end_to_end_pipeline(model, run_config), window, iterations=10,
                              window_seconds=window.duration)
    assert stats.mean_ms < 4000.0
    assert stats.real_time_factor > 1.0
