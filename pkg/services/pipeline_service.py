"""
Orchestration: parallel resumable feature extraction, feature-directory loading,
training and evaluation from stored features, front-end comparison
"""

import os
import glob
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Dict, Any, List, Tuple, Sequence, Callable
import numpy as np

from models.audio_models import AudioClip, DatasetManifest, CLASS_NAMES
from models.cnn_models import Model, TrainResult
from models.eval_models import EvalReport
from models.feature_models import FeatureImage, FRONTEND_GAMMATONE, FRONTEND_MFCC
from models.filterbank_models import Filterbank, FilterbankConfig
from models.run_config import RunConfig
from middleware.feature_cache import FeatureCache
from services.audio_service import read_wav, resample, segment
from services.cnn_model import build_reference_model, predict, predict_batch, model_footprint
from services.dataset_service import entry_path
from services.feature_io import save_feature_image, load_feature_image, read_sidecar
from services.feature_service import compute_cochleagram, compute_mfcc_image
from services.filterbank_service import build_filterbank
from services.metrics_service import build_report
from services.training_service import train
from utils.error_handlers import GammasonarError, FeatureFileError, DatasetError
from utils.logging_config import get_logger

logger = get_logger('pipeline')


@lru_cache(maxsize=4)
def cached_filterbank(config: FilterbankConfig) -> Filterbank:
    """One bank per process and config"""
    return build_filterbank(config)


def compute_feature_image(clip: AudioClip, run_config: RunConfig) -> FeatureImage:
    """Front-end dispatch on run_config.frontend"""
    config_hash = run_config.feature_hash()
    if run_config.frontend == FRONTEND_MFCC:
        return compute_mfcc_image(clip, run_config.framing, run_config.mfcc,
                                  tuple(run_config.image_size), config_hash=config_hash)
    bank = cached_filterbank(run_config.filterbank)
    return compute_cochleagram(clip, bank, run_config.framing, run_config.compression,
                               tuple(run_config.image_size), config_hash=config_hash)


def prepare_clip(clip: AudioClip, run_config: RunConfig) -> Tuple[AudioClip, Dict[str, Any]]:
    """Bring a clip to the front-end sample rate, noting any conversion"""
    target = run_config.filterbank.sample_rate
    if clip.sample_rate == target:
        return clip, {}
    return resample(clip, target), {'resampled_from': clip.sample_rate}


def _extract_one(task: Dict[str, Any]) -> Dict[str, Any]:
    run_config = RunConfig.from_dict(task['config'])
    result = {'source': task['source'], 'outputs': [], 'error': None}
    try:
        clip, note = prepare_clip(read_wav(task['source'], label=task['label']), run_config)
        windows = segment(clip, run_config.dataset.segment_window)
        for i, window in enumerate(windows):
            image = compute_feature_image(window, run_config)
            image.source_file = task['source']
            extra = {
                'label': task['label'],
                'split': task['split'],
                'segment': i,
                'config': task['config'],
            }
            extra.update(note)
            result['outputs'].append(save_feature_image(image, f"{task['out_base']}_{i}", extra))
        result.update(note)
    except GammasonarError as e:
        result['error'] = e.message
    except OSError as e:
        result['error'] = str(e)
    return result


def extract_features(manifest: DatasetManifest, run_config: RunConfig, out_dir: str,
                     workers: int = 1) -> Dict[str, Any]:
    """
    One feature file per 4 s segment under out_dir/<split>/<class_name>/.
    Sources whose outputs already exist under the same config hash are skipped;
    unreadable sources are logged and reported, not raised.
    """
    os.makedirs(out_dir, exist_ok=True)
    cache = FeatureCache(out_dir)
    config_hash = run_config.feature_hash()
    config_doc = run_config.to_dict()

    summary = {'computed': 0, 'skipped': 0, 'failed': [], 'outputs': [], 'resampled': 0,
               'config_hash': config_hash}
    tasks = []
    for entry in manifest.entries:
        source = entry_path(manifest, entry)
        cached = cache.get(source, config_hash)
        if cached is not None:
            summary['skipped'] += 1
            summary['outputs'].extend(cached)
            continue
        stem = os.path.splitext(os.path.basename(entry.path))[0]
        tasks.append({
            'source': source,
            'label': entry.class_id,
            'split': entry.split,
            'config': config_doc,
            'out_base': os.path.join(out_dir, entry.split, CLASS_NAMES[entry.class_id], stem),
        })

    logger.info(
        f"EXTRACTION_START - Frontend: {run_config.frontend} - Sources: {len(manifest.entries)} - "
        f"Pending: {len(tasks)} - Workers: {workers} - Hash: {config_hash}"
    )
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_extract_one, tasks))
    else:
        results = [_extract_one(task) for task in tasks]

    for result in results:
        if result['error'] is not None:
            logger.error(f"EXTRACTION_FAILED - Path: {result['source']} - Error: {result['error']}",
                         extra={'path': result['source']})
            summary['failed'].append({'path': result['source'], 'error': result['error']})
            continue
        summary['computed'] += 1
        summary['outputs'].extend(result['outputs'])
        if 'resampled_from' in result:
            summary['resampled'] += 1
        cache.set(result['source'], config_hash, result['outputs'])

    logger.info(
        f"EXTRACTION_COMPLETE - Computed: {summary['computed']} - Skipped: {summary['skipped']} - "
        f"Failed: {len(summary['failed'])} - Files: {len(summary['outputs'])}"
    )
    return summary


def load_feature_dir(features_dir: str, split: str) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    """(N, 3, H, W) images, labels and paths of one split, in sorted path order"""
    pattern = os.path.join(features_dir, split, '**', '*.f32')
    paths = sorted(glob.glob(pattern, recursive=True))
    images, labels = [], []
    for path in paths:
        sidecar = read_sidecar(path)
        if 'label' not in sidecar:
            raise FeatureFileError(f"Sidecar for {path} carries no label", details={'path': path})
        images.append(load_feature_image(path).as_chw())
        labels.append(int(sidecar['label']))
    if not images:
        return np.zeros((0, 3, 1, 1)), np.zeros(0, dtype=np.int64), []
    shapes = {img.shape for img in images}
    if len(shapes) > 1:
        raise FeatureFileError(f"Feature files under {features_dir}/{split} differ in shape: {sorted(shapes)}")
    return np.stack(images), np.asarray(labels, dtype=np.int64), paths


def train_from_features(features_dir: str, run_config: RunConfig) -> TrainResult:
    train_x, train_y, _ = load_feature_dir(features_dir, 'train')
    val_x, val_y, _ = load_feature_dir(features_dir, 'val')
    if train_x.shape[0] == 0 or val_x.shape[0] == 0:
        raise DatasetError(
            f"Training needs non-empty train and val splits under {features_dir} "
            f"(found {train_x.shape[0]} and {val_x.shape[0]})"
        )
    c, h, w = train_x.shape[1:]
    model = build_reference_model((h, w, c), num_classes=len(CLASS_NAMES), seed=run_config.seed)
    return train(model, (train_x, train_y), (val_x, val_y), run_config.train)


def evaluate(model: Model, features_dir: str, split: str = 'test') -> EvalReport:
    images, labels, _ = load_feature_dir(features_dir, split)
    if images.shape[0] == 0:
        raise DatasetError(f"No feature files for split '{split}' under {features_dir}")
    probabilities = predict_batch(model, images)
    return build_report(labels, probabilities, CLASS_NAMES, split=split, model_info=model_footprint(model))


def end_to_end_pipeline(model: Model, run_config: RunConfig) -> Callable[[AudioClip], np.ndarray]:
    """Closure clip -> probabilities, feature extraction included"""
    def run(clip: AudioClip) -> np.ndarray:
        return predict(model, compute_feature_image(clip, run_config))
    return run


def inference_pipeline(model: Model) -> Callable[[FeatureImage], np.ndarray]:
    def run(image: FeatureImage) -> np.ndarray:
        return predict(model, image)
    return run


def compare_frontends(manifest: DatasetManifest, run_config: RunConfig, seeds: Sequence[int],
                      work_dir: str, workers: int = 1) -> List[Dict[str, Any]]:
    """
    Identical back-end, seeds and budget on both front-ends; per-seed test accuracy
    """
    feature_dirs = {}
    for frontend in (FRONTEND_GAMMATONE, FRONTEND_MFCC):
        config = run_config.with_overrides(frontend=frontend)
        feature_dirs[frontend] = os.path.join(work_dir, frontend)
        extract_features(manifest, config, feature_dirs[frontend], workers=workers)

    results = []
    for seed in seeds:
        row = {'seed': int(seed)}
        for frontend, features_dir in feature_dirs.items():
            config = run_config.with_overrides(frontend=frontend, seed=int(seed), **{'train.seed': int(seed)})
            trained = train_from_features(features_dir, config)
            report = evaluate(trained.model, features_dir, 'test')
            row[frontend] = report.accuracy
            row[f'{frontend}_kappa'] = report.kappa
        logger.info(
            f"FRONTEND_COMPARISON - Seed: {seed} - Gammatone: {row[FRONTEND_GAMMATONE]:.4f} - "
            f"MFCC: {row[FRONTEND_MFCC]:.4f}"
        )
        results.append(row)
    return results
