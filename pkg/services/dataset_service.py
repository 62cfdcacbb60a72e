"""
Synthetic corpus generation, manifest persistence and split loading
"""

import os
import json
from concurrent.futures import ProcessPoolExecutor
from typing import List, Tuple, Sequence, Dict, Any
import numpy as np

from models.audio_models import (
    AudioClip, VesselClassProfile, ManifestEntry, DatasetManifest,
    DEFAULT_PROFILES, SPLITS, SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST
)
from services.audio_service import read_wav, write_wav
from services.synth_service import synth_components, mix_components
from utils.error_handlers import DatasetError, MissingAudioError
from utils.logging_config import get_logger

logger = get_logger('dataset')

MANIFEST_FILE = 'manifest.jsonl'
HEADER_FILE = 'manifest.header.json'

# Stream id keeping the split shuffle independent of per-clip synthesis draws
_SPLIT_STREAM = 7919


def split_counts(total: int, fractions: Sequence[float]) -> List[int]:
    """Largest-remainder allocation of `total` items to the split fractions"""
    exact = [total * f for f in fractions]
    counts = [int(np.floor(x)) for x in exact]
    remainder = total - sum(counts)
    order = sorted(range(len(exact)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def assign_splits(per_class: int, class_id: int, fractions: Sequence[float], seed: int) -> List[str]:
    """Split tag for every clip index of one class, stratified and seeded"""
    counts = split_counts(per_class, fractions)
    tags = [SPLIT_TRAIN] * counts[0] + [SPLIT_VAL] * counts[1] + [SPLIT_TEST] * counts[2]
    rng = np.random.default_rng([seed, class_id, _SPLIT_STREAM])
    order = rng.permutation(per_class)
    assigned = [''] * per_class
    for position, idx in enumerate(order):
        assigned[int(idx)] = tags[position]
    return assigned


def clip_seed(seed: int, class_id: int, idx: int) -> List[int]:
    return [int(seed), int(class_id), int(idx)]


def _synth_to_file(task: Dict[str, Any]) -> Tuple[str, float]:
    profile = VesselClassProfile.from_dict(task['profile'])
    signal, noise, params = synth_components(
        profile, task['duration'], task['sample_rate'],
        clip_seed(task['seed'], profile.class_id, task['idx'])
    )
    clip = AudioClip(samples=mix_components(signal, noise), sample_rate=task['sample_rate'],
                     label=profile.class_id)
    write_wav(clip, task['path'])
    return task['path'], params['snr']


def make_dataset(out_dir: str, profiles: Sequence[VesselClassProfile] = DEFAULT_PROFILES,
                 per_class: int = 200, duration: float = 4.0, seed: int = 0,
                 sample_rate: int = 16000,
                 split_fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1),
                 workers: int = 1) -> DatasetManifest:
    """
    Write per_class WAVs per profile under out_dir/<class_name>/<seed>_<idx>.wav
    and the manifest next to them.
    """
    if per_class < 1:
        raise DatasetError(f"per_class must be at least 1, got {per_class}")
    for profile in profiles:
        profile.validate(sample_rate)
    DatasetManifest(entries=[], seed=seed, split_fractions=tuple(split_fractions)).validate()

    try:
        os.makedirs(out_dir, exist_ok=True)
        for profile in profiles:
            os.makedirs(os.path.join(out_dir, profile.name), exist_ok=True)
    except OSError as e:
        raise DatasetError(f"Cannot create output directory {out_dir}: {e}", details={'path': out_dir})

    tasks, tags = [], []
    for profile in profiles:
        split_tags = assign_splits(per_class, profile.class_id, split_fractions, seed)
        for idx in range(per_class):
            relative = os.path.join(profile.name, f"{seed}_{idx}.wav")
            tasks.append({
                'profile': profile.to_dict(),
                'duration': duration,
                'sample_rate': sample_rate,
                'seed': seed,
                'idx': idx,
                'path': os.path.join(out_dir, relative),
                'relative': relative
            })
            tags.append((profile.class_id, split_tags[idx]))

    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_synth_to_file, tasks))
        else:
            results = [_synth_to_file(task) for task in tasks]
    except OSError as e:
        raise DatasetError(f"Cannot write audio under {out_dir}: {e}", details={'path': out_dir})

    entries = [
        ManifestEntry(path=task['relative'], class_id=class_id, split=split,
                      duration=float(duration), snr=float(snr))
        for task, (class_id, split), (_, snr) in zip(tasks, tags, results)
    ]
    manifest = DatasetManifest(
        entries=entries, seed=seed, split_fractions=tuple(split_fractions),
        profiles=[p.to_dict() for p in profiles], sample_rate=sample_rate, root=out_dir
    ).validate()
    save_manifest(manifest, out_dir)
    logger.info(
        f"DATASET_CREATED - Path: {out_dir} - Classes: {len(profiles)} - "
        f"Per class: {per_class} - Files: {len(entries)} - Seed: {seed}"
    )
    return manifest


def save_manifest(manifest: DatasetManifest, directory: str) -> str:
    """JSONL entries plus a JSON header, single writer"""
    path = os.path.join(directory, MANIFEST_FILE)
    try:
        with open(path, 'w', encoding='utf-8') as fh:
            for entry in manifest.entries:
                fh.write(json.dumps(entry.to_dict(), sort_keys=True) + '\n')
        with open(os.path.join(directory, HEADER_FILE), 'w', encoding='utf-8') as fh:
            json.dump(manifest.header(), fh, sort_keys=True, indent=2)
    except OSError as e:
        raise DatasetError(f"Cannot write manifest to {directory}: {e}", details={'path': directory})
    return path


def load_manifest(path: str) -> DatasetManifest:
    """Read a manifest given its .jsonl file or the directory holding it"""
    if os.path.isdir(path):
        path = os.path.join(path, MANIFEST_FILE)
    directory = os.path.dirname(path) or '.'
    try:
        with open(os.path.join(directory, HEADER_FILE), 'r', encoding='utf-8') as fh:
            header = json.load(fh)
        entries = []
        with open(path, 'r', encoding='utf-8') as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    entries.append(ManifestEntry.from_dict(json.loads(line)))
                except json.JSONDecodeError as e:
                    raise DatasetError(f"{path}:{line_no}: invalid JSON ({e.msg})", details={'path': path})
    except FileNotFoundError as e:
        raise DatasetError(f"Manifest file missing: {e.filename}", details={'path': e.filename})
    except json.JSONDecodeError as e:
        raise DatasetError(f"Manifest header is not valid JSON: {e}", details={'path': directory})

    try:
        manifest = DatasetManifest(
            entries=entries,
            seed=int(header['seed']),
            split_fractions=tuple(float(f) for f in header['fractions']),
            profiles=header.get('profiles', []),
            sample_rate=int(header.get('sample_rate', 16000)),
            root=directory
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetError(f"Manifest header is incomplete: {e}", details={'path': directory})
    return manifest.validate()


def entry_path(manifest: DatasetManifest, entry: ManifestEntry) -> str:
    return entry.path if os.path.isabs(entry.path) else os.path.join(manifest.root, entry.path)


def verify_files(manifest: DatasetManifest) -> List[str]:
    """Paths listed in the manifest that are missing on disk"""
    return [entry_path(manifest, e) for e in manifest.entries if not os.path.isfile(entry_path(manifest, e))]


def load_split(manifest: DatasetManifest, split: str) -> List[Tuple[AudioClip, int]]:
    """Clips of one split in manifest order, each with its class label"""
    if split not in SPLITS:
        raise DatasetError(f"Unknown split '{split}', expected one of {SPLITS}")
    loaded = []
    for entry in manifest.split_entries(split):
        path = entry_path(manifest, entry)
        if not os.path.isfile(path):
            raise MissingAudioError(f"Manifest entry points to a missing file: {path}", details={'path': path})
        clip = read_wav(path, label=entry.class_id)
        loaded.append((clip, entry.class_id))
    logger.debug(f"SPLIT_LOADED - Split: {split} - Clips: {len(loaded)}")
    return loaded
