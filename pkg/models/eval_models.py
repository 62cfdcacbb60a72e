"""
Data models for evaluation reports
"""

from dataclasses import dataclass, field
from typing import List, Optional, Dict, Any, Tuple
import numpy as np


@dataclass
class ConfusionMatrix:
    """C x C counts, rows = true class, columns = predicted class"""
    counts: np.ndarray

    @property
    def num_classes(self) -> int:
        return int(self.counts.shape[0])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_list(self) -> List[List[int]]:
        return self.counts.astype(int).tolist()


@dataclass
class RocCurve:
    """Threshold-sweep (fpr, tpr) points and trapezoidal AUC"""
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


@dataclass
class ClassScores:
    """Per-class and averaged precision / recall / F1"""
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray

    @property
    def macro_precision(self) -> float:
        return float(self.precision.mean())

    @property
    def macro_recall(self) -> float:
        return float(self.recall.mean())

    @property
    def macro_f1(self) -> float:
        return float(self.f1.mean())

    def weighted(self, values: np.ndarray) -> float:
        total = self.support.sum()
        return float((values * self.support).sum() / total) if total else 0.0


@dataclass
class LatencyStats:
    """Per-sample wall-clock statistics in milliseconds"""
    mean_ms: float
    p50_ms: float
    p95_ms: float
    min_ms: float
    max_ms: float
    iterations: int
    window_seconds: float = 4.0

    @property
    def throughput_per_s(self) -> float:
        return 1000.0 / self.mean_ms if self.mean_ms > 0 else float('inf')

    @property
    def real_time_factor(self) -> float:
        return (self.window_seconds * 1000.0) / self.mean_ms if self.mean_ms > 0 else float('inf')

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mean_ms': self.mean_ms,
            'p50_ms': self.p50_ms,
            'p95_ms': self.p95_ms,
            'min_ms': self.min_ms,
            'max_ms': self.max_ms,
            'iterations': self.iterations,
            'throughput_per_s': self.throughput_per_s,
            'real_time_factor': self.real_time_factor
        }


@dataclass
class EvalReport:
    """Everything the evaluation step reports"""
    class_names: List[str]
    confusion: ConfusionMatrix
    normalized_confusion: np.ndarray
    scores: ClassScores
    accuracy: float
    kappa: float
    roc: List[Optional[RocCurve]]
    roc_undefined_reason: Dict[int, str] = field(default_factory=dict)
    latency: Optional[Dict[str, LatencyStats]] = None
    model: Optional[Dict[str, Any]] = None
    split: str = 'test'

    @property
    def mean_auc(self) -> Optional[float]:
        defined = [curve.auc for curve in self.roc if curve is not None]
        return float(np.mean(defined)) if defined else None

    def to_dict(self) -> Dict[str, Any]:
        per_class = []
        for i, name in enumerate(self.class_names):
            curve = self.roc[i] if i < len(self.roc) else None
            per_class.append({
                'class_id': i,
                'name': name,
                'precision': float(self.scores.precision[i]),
                'recall': float(self.scores.recall[i]),
                'f1': float(self.scores.f1[i]),
                'support': int(self.scores.support[i]),
                'auc': curve.auc if curve is not None else None,
                'roc_undefined': self.roc_undefined_reason.get(i)
            })

        report = {
            'split': self.split,
            'num_samples': self.confusion.total,
            'accuracy': self.accuracy,
            'kappa': self.kappa,
            'macro': {
                'precision': self.scores.macro_precision,
                'recall': self.scores.macro_recall,
                'f1': self.scores.macro_f1,
                'auc': self.mean_auc
            },
            'weighted': {
                'precision': self.scores.weighted(self.scores.precision),
                'recall': self.scores.weighted(self.scores.recall),
                'f1': self.scores.weighted(self.scores.f1)
            },
            'per_class': per_class,
            'confusion': self.confusion.to_list(),
            'confusion_normalized': self.normalized_confusion.tolist(),
            'roc': [
                {'fpr': curve.fpr.tolist(), 'tpr': curve.tpr.tolist()} if curve is not None else None
                for curve in self.roc
            ]
        }
        if self.model is not None:
            report['model'] = self.model
        if self.latency is not None:
            report['latency'] = {name: stats.to_dict() for name, stats in self.latency.items()}
        return report
