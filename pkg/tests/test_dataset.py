import os
import json
import pytest

from models.audio_models import CLASS_NAMES, SPLITS
from services.dataset_service import (
    split_counts, assign_splits, make_dataset, load_manifest, save_manifest, load_split,
    verify_files, entry_path, MANIFEST_FILE, HEADER_FILE
)
from utils.error_handlers import DatasetError, MissingAudioError


def test_split_counts_largest_remainder():
    assert split_counts(10, (0.8, 0.1, 0.1)) == [8, 1, 1]
    assert split_counts(7, (0.5, 0.25, 0.25)) == [3, 2, 2]
    for total in range(1, 40):
        counts = split_counts(total, (0.7, 0.2, 0.1))
        assert sum(counts) == total
        assert all(abs(c - total * f) < 1 for c, f in zip(counts, (0.7, 0.2, 0.1)))


def test_assign_splits_is_seeded_and_stratified():
    tags = assign_splits(20, 2, (0.8, 0.1, 0.1), seed=5)
    assert tags == assign_splits(20, 2, (0.8, 0.1, 0.1), seed=5)
    assert [tags.count(s) for s in SPLITS] == [16, 2, 2]
    assert tags != assign_splits(20, 3, (0.8, 0.1, 0.1), seed=5)


@pytest.fixture
def small_dataset(tmp_path):
    out_dir = str(tmp_path / 'data')
    return make_dataset(out_dir, per_class=10, duration=0.25, seed=9)


def test_make_dataset_layout(small_dataset):
    root = small_dataset.root
    assert sorted(os.listdir(root)) == sorted(list(CLASS_NAMES) + [MANIFEST_FILE, HEADER_FILE])
    assert len(small_dataset.entries) == 50
    for name in CLASS_NAMES:
        assert len(os.listdir(os.path.join(root, name))) == 10
    assert os.path.join('Cargo', '9_3.wav') in [e.path for e in small_dataset.entries]
    assert verify_files(small_dataset) == []


def test_every_class_is_split_eight_one_one(small_dataset):
    for class_id in range(len(CLASS_NAMES)):
        tags = [e.split for e in small_dataset.entries if e.class_id == class_id]
        assert [tags.count(s) for s in SPLITS] == [8, 1, 1]


def test_manifest_roundtrip(small_dataset):
    loaded = load_manifest(small_dataset.root)
    assert loaded.entries == small_dataset.entries
    assert loaded.seed == 9
    assert loaded.split_fractions == (0.8, 0.1, 0.1)
    assert [p['name'] for p in loaded.profiles] == list(CLASS_NAMES)
    with open(os.path.join(small_dataset.root, HEADER_FILE)) as fh:
        assert set(json.load(fh)) >= {'seed', 'fractions', 'profiles'}


def test_dataset_is_reproducible(tmp_path):
    a = make_dataset(str(tmp_path / 'a'), per_class=2, duration=0.25, seed=1)
    b = make_dataset(str(tmp_path / 'b'), per_class=2, duration=0.25, workers=2, seed=1)
    for ea, eb in zip(a.entries, b.entries):
        assert ea == eb
        with open(entry_path(a, ea), 'rb') as fa, open(entry_path(b, eb), 'rb') as fb:
            assert fa.read() == fb.read()


def test_load_split_returns_labelled_clips(small_dataset):
    test_clips = load_split(small_dataset, 'test')
    assert len(test_clips) == 5
    assert sorted(label for _, label in test_clips) == [0, 1, 2, 3, 4]
    assert all(clip.sample_rate == 16000 and clip.num_samples == 4000 for clip, _ in test_clips)


def test_load_split_with_missing_file(small_dataset):
    os.remove(entry_path(small_dataset, small_dataset.split_entries('val')[0]))
    with pytest.raises(MissingAudioError):
        load_split(small_dataset, 'val')
    with pytest.raises(DatasetError):
        load_split(small_dataset, 'holdout')


def test_malformed_manifest_line(small_dataset):
    path = os.path.join(small_dataset.root, MANIFEST_FILE)
    with open(path, 'a') as fh:
        fh.write('{"path": "x.wav"\n')
    with pytest.raises(DatasetError):
        load_manifest(path)


def test_missing_manifest(tmp_path):
    with pytest.raises(DatasetError):
        load_manifest(str(tmp_path))


def test_unwritable_output_directory(tmp_path):
    blocker = tmp_path / 'file'
    blocker.write_text('occupied')
    with pytest.raises(DatasetError):
        make_dataset(str(blocker), per_class=1, duration=0.1)


def test_save_manifest_writes_one_line_per_entry(small_dataset, tmp_path):
    path = save_manifest(small_dataset, str(tmp_path))
    with open(path) as fh:
        assert len([line for line in fh if line.strip()]) == 50
