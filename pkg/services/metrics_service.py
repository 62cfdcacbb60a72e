"""
Classification metrics: confusion matrices, P/R/F1, Cohen's kappa, one-vs-rest ROC
"""

import os
import csv
import json
from typing import List, Sequence, Optional, Dict
import numpy as np
from sklearn import metrics as skm

from models.eval_models import ConfusionMatrix, RocCurve, ClassScores, EvalReport
from services.feature_io import write_pgm_array
from utils.error_handlers import MetricsError
from utils.logging_config import get_logger

logger = get_logger('metrics')

CROSS_CHECK_TOLERANCE = 1e-12


def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    """Elementwise ratio with 0 wherever the denominator is 0"""
    numerator = np.asarray(numerator, dtype=np.float64)
    denominator = np.asarray(denominator, dtype=np.float64)
    out = np.zeros_like(numerator)
    np.divide(numerator, denominator, out=out, where=denominator != 0)
    return out


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int], num_classes: int) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise MetricsError(f"y_true has {y_true.shape[0]} labels, y_pred has {y_pred.shape[0]}")
    if y_true.size == 0:
        return ConfusionMatrix(counts=np.zeros((num_classes, num_classes), dtype=np.int64))
    for name, labels in (('y_true', y_true), ('y_pred', y_pred)):
        if labels.min() < 0 or labels.max() >= num_classes:
            raise MetricsError(f"{name} contains labels outside 0..{num_classes - 1}")
    counts = skm.confusion_matrix(y_true, y_pred, labels=np.arange(num_classes))
    return ConfusionMatrix(counts=counts.astype(np.int64))


def row_normalize(cm: ConfusionMatrix) -> np.ndarray:
    """Per-true-class rates; all-zero rows stay zero"""
    counts = cm.counts.astype(np.float64)
    return _safe_divide(counts, counts.sum(axis=1, keepdims=True) * np.ones_like(counts))


def precision_recall_f1(cm: ConfusionMatrix) -> ClassScores:
    counts = cm.counts.astype(np.float64)
    diag = np.diag(counts)
    precision = _safe_divide(diag, counts.sum(axis=0))
    recall = _safe_divide(diag, counts.sum(axis=1))
    f1 = _safe_divide(2.0 * precision * recall, precision + recall)
    return ClassScores(precision=precision, recall=recall, f1=f1,
                       support=cm.counts.sum(axis=1).astype(np.int64))


def accuracy(cm: ConfusionMatrix) -> float:
    total = cm.total
    return float(np.trace(cm.counts) / total) if total else 0.0


def cohens_kappa(cm: ConfusionMatrix) -> float:
    """(p_o - p_e) / (1 - p_e) from the confusion matrix marginals"""
    total = float(cm.total)
    if total == 0:
        raise MetricsError("Cohen's kappa is undefined for an empty confusion matrix")
    counts = cm.counts.astype(np.float64)
    p_o = np.trace(counts) / total
    p_e = float(np.sum(counts.sum(axis=1) * counts.sum(axis=0)) / (total * total))
    if np.isclose(p_e, 1.0, rtol=0.0, atol=CROSS_CHECK_TOLERANCE):
        if np.isclose(p_o, 1.0, rtol=0.0, atol=CROSS_CHECK_TOLERANCE):
            return 1.0
        raise MetricsError("Cohen's kappa is undefined: chance agreement is 1 but observed agreement is not")
    return float((p_o - p_e) / (1.0 - p_e))


def roc_curve(scores: Sequence[float], labels: Sequence[int], class_id: int = 1) -> RocCurve:
    """One-vs-rest ROC: `labels` flag membership of class_id, threshold sweep over unique scores"""
    scores = np.asarray(scores, dtype=np.float64)
    positive = np.asarray(labels).astype(bool)
    if positive.shape != scores.shape:
        raise MetricsError(f"{scores.shape[0]} scores but {positive.shape[0]} labels")
    if positive.all() or not positive.any():
        raise MetricsError(
            f"ROC for class {class_id} is undefined: labels contain a single class",
            details={'class_id': class_id}
        )
    fpr, tpr, _ = skm.roc_curve(positive.astype(np.int64), scores, drop_intermediate=False)
    return RocCurve(fpr=fpr, tpr=tpr, auc=float(skm.auc(fpr, tpr)))


def build_report(y_true: Sequence[int], probabilities: np.ndarray, class_names: Sequence[str],
                 split: str = 'test', model_info: Optional[Dict] = None) -> EvalReport:
    """Full report from true labels and per-class probabilities, with internal cross-checks"""
    y_true = np.asarray(y_true, dtype=np.int64)
    probabilities = np.asarray(probabilities, dtype=np.float64)
    num_classes = len(class_names)
    if y_true.size == 0:
        raise MetricsError(f"The {split} split is empty")
    y_pred = np.argmax(probabilities, axis=1)

    cm = confusion_matrix(y_true, y_pred, num_classes)
    scores = precision_recall_f1(cm)
    acc = accuracy(cm)
    kappa = cohens_kappa(cm)

    weighted_recall = scores.weighted(scores.recall)
    if abs(acc - weighted_recall) > 1e-9:
        raise MetricsError(f"Accuracy cross-check failed: trace/total={acc}, weighted recall={weighted_recall}")
    if kappa > acc + 1e-9:
        raise MetricsError(f"Kappa {kappa} exceeds observed agreement {acc}")

    curves: List[Optional[RocCurve]] = []
    undefined = {}
    for c in range(num_classes):
        try:
            curves.append(roc_curve(probabilities[:, c], (y_true == c).astype(np.int64), c))
        except MetricsError as e:
            curves.append(None)
            undefined[c] = e.message
            logger.warning(f"ROC_UNDEFINED - Class: {class_names[c]} - Split: {split}")

    report = EvalReport(
        class_names=list(class_names), confusion=cm, normalized_confusion=row_normalize(cm),
        scores=scores, accuracy=acc, kappa=kappa, roc=curves, roc_undefined_reason=undefined,
        model=model_info, split=split
    )
    logger.info(
        f"EVALUATION_COMPLETE - Split: {split} - Samples: {cm.total} - Accuracy: {acc:.4f} - "
        f"Kappa: {kappa:.4f} - Macro F1: {scores.macro_f1:.4f}"
    )
    return report


def write_report(report: EvalReport, out_dir: str, prefix: str = 'eval') -> Dict[str, str]:
    """JSON report, confusion and ROC CSVs, normalized-confusion PGM heatmap"""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        'report': os.path.join(out_dir, f'{prefix}_report.json'),
        'confusion': os.path.join(out_dir, f'{prefix}_confusion.csv'),
        'roc': os.path.join(out_dir, f'{prefix}_roc.csv'),
        'heatmap': os.path.join(out_dir, f'{prefix}_confusion.pgm'),
    }
    with open(paths['report'], 'w', encoding='utf-8') as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)

    with open(paths['confusion'], 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh)
        writer.writerow(['true\\pred'] + report.class_names)
        for name, row in zip(report.class_names, report.confusion.to_list()):
            writer.writerow([name] + row)

    with open(paths['roc'], 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh)
        writer.writerow(['class', 'fpr', 'tpr'])
        for name, curve in zip(report.class_names, report.roc):
            if curve is None:
                continue
            for fpr, tpr in curve.points:
                writer.writerow([name, repr(fpr), repr(tpr)])

    write_pgm_array(report.normalized_confusion, paths['heatmap'])
    return paths
