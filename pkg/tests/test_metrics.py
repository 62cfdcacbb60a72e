import csv
import json
import numpy as np
import pytest
from scipy.stats import mannwhitneyu
from sklearn.metrics import cohen_kappa_score, roc_auc_score, f1_score

from models.eval_models import ConfusionMatrix
from services.metrics_service import (
    confusion_matrix, row_normalize, precision_recall_f1, cohens_kappa, roc_curve,
    build_report, write_report
)
from services.feature_io import read_pgm
from utils.error_handlers import MetricsError

NAMES = ['a', 'b', 'c']


def test_confusion_matrix_counts():
    cm = confusion_matrix([0, 0, 1, 2, 2], [0, 1, 1, 2, 0], 3)
    np.testing.assert_array_equal(cm.counts, [[1, 1, 0], [0, 1, 0], [1, 0, 1]])
    assert cm.total == 5


def test_empty_confusion_matrix_is_zero():
    assert confusion_matrix([], [], 4).total == 0


def test_out_of_range_labels():
    with pytest.raises(MetricsError):
        confusion_matrix([0, 3], [0, 1], 3)


def test_row_normalization_keeps_empty_rows_zero():
    normalized = row_normalize(ConfusionMatrix(counts=np.array([[3, 1, 0], [0, 0, 0], [0, 2, 2]])))
    np.testing.assert_allclose(normalized.sum(axis=1), [1.0, 0.0, 1.0])


def test_kappa_hand_computed_case():
    cm = ConfusionMatrix(counts=np.array([[45, 5], [15, 35]]))
    assert cohens_kappa(cm) == pytest.approx(0.6, abs=1e-12)


def test_kappa_of_independent_marginals_is_zero():
    row = np.array([0.2, 0.3, 0.5])
    col = np.array([0.1, 0.6, 0.3])
    cm = ConfusionMatrix(counts=np.round(np.outer(row, col) * 1000).astype(np.int64))
    assert cohens_kappa(cm) == pytest.approx(0.0, abs=1e-12)


def test_kappa_matches_sklearn(rng):
    y_true = rng.integers(0, 3, 200)
    y_pred = np.where(rng.random(200) < 0.7, y_true, rng.integers(0, 3, 200))
    cm = confusion_matrix(y_true, y_pred, 3)
    assert cohens_kappa(cm) == pytest.approx(cohen_kappa_score(y_true, y_pred), abs=1e-12)


def test_kappa_perfect_single_class_agreement():
    assert cohens_kappa(ConfusionMatrix(counts=np.array([[4, 0], [0, 0]]))) == 1.0


def test_kappa_of_empty_matrix():
    with pytest.raises(MetricsError):
        cohens_kappa(ConfusionMatrix(counts=np.zeros((2, 2), dtype=np.int64)))


def test_scores_match_sklearn(rng):
    y_true = rng.integers(0, 3, 100)
    y_pred = np.where(rng.random(100) < 0.6, y_true, rng.integers(0, 3, 100))
    scores = precision_recall_f1(confusion_matrix(y_true, y_pred, 3))
    np.testing.assert_allclose(scores.f1, f1_score(y_true, y_pred, average=None), atol=1e-12)
    assert scores.macro_f1 == pytest.approx(f1_score(y_true, y_pred, average='macro'), abs=1e-12)
    assert scores.weighted(scores.f1) == pytest.approx(f1_score(y_true, y_pred, average='weighted'), abs=1e-12)


def test_class_never_predicted_has_zero_precision():
    scores = precision_recall_f1(confusion_matrix([0, 1, 2], [0, 0, 0], 3))
    assert scores.precision[1] == 0.0 and scores.f1[1] == 0.0


def test_auc_equals_mann_whitney_statistic():
    rng = np.random.default_rng(99)
    for _ in range(100):
        labels = np.zeros(20, dtype=int)
        labels[rng.choice(20, size=rng.integers(1, 20), replace=False)] = 1
        scores = np.round(rng.random(20), 1)
        curve = roc_curve(scores, labels)
        u = mannwhitneyu(scores[labels == 1], scores[labels == 0]).statistic
        expected = u / (labels.sum() * (20 - labels.sum()))
        assert curve.auc == pytest.approx(expected, abs=1e-12)
        assert curve.auc == pytest.approx(roc_auc_score(labels, scores), abs=1e-12)


def test_roc_curve_runs_from_origin_to_corner():
    curve = roc_curve([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert curve.points[0] == (0.0, 0.0)
    assert curve.points[-1] == (1.0, 1.0)
    assert np.all(np.diff(curve.fpr) >= 0)


def test_single_class_roc_is_undefined():
    with pytest.raises(MetricsError):
        roc_curve([0.2, 0.9], [1, 1])


def perfect_probabilities(labels, num_classes):
    probs = np.full((len(labels), num_classes), 0.05)
    probs[np.arange(len(labels)), labels] = 0.9
    return probs


def test_report_of_perfect_predictions():
    labels = np.array([0, 1, 2, 0, 1, 2])
    report = build_report(labels, perfect_probabilities(labels, 3), NAMES)
    assert report.accuracy == 1.0
    assert report.kappa == pytest.approx(1.0)
    assert report.mean_auc == 1.0


def test_report_marks_absent_class_undefined():
    labels = np.array([0, 1, 0, 1])
    report = build_report(labels, perfect_probabilities(labels, 3), NAMES)
    assert report.roc[2] is None
    assert 2 in report.roc_undefined_reason
    assert report.roc[0].auc == 1.0


def test_report_kappa_never_exceeds_accuracy(rng):
    labels = rng.integers(0, 3, 60)
    report = build_report(labels, rng.random((60, 3)), NAMES)
    assert report.kappa <= report.accuracy + 1e-12
    assert report.accuracy == pytest.approx(report.scores.weighted(report.scores.recall))


def test_written_report(rng, tmp_path):
    labels = rng.integers(0, 3, 30)
    report = build_report(labels, rng.random((30, 3)), NAMES, split='val')
    paths = write_report(report, str(tmp_path), prefix='eval_val')

    with open(paths['report']) as fh:
        document = json.load(fh)
    assert document['split'] == 'val'
    assert document['num_samples'] == 30
    assert set(document) >= {'accuracy', 'kappa', 'macro', 'confusion', 'per_class'}
    np.testing.assert_allclose(np.sum(document['confusion_normalized'], axis=1), 1.0)

    with open(paths['confusion'], newline='') as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ['true\\pred'] + NAMES
    assert sum(int(v) for row in rows[1:] for v in row[1:]) == 30

    assert read_pgm(paths['heatmap']).shape == (3, 3)


def test_report_json_is_deterministic(rng, tmp_path):
    labels = rng.integers(0, 3, 30)
    probs = rng.random((30, 3))
    first = write_report(build_report(labels, probs, NAMES), str(tmp_path / 'one'))
    second = write_report(build_report(labels, probs, NAMES), str(tmp_path / 'two'))
    with open(first['report'], 'rb') as a, open(second['report'], 'rb') as b:
        assert a.read() == b.read()
