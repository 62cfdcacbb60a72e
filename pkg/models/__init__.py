"""
Data models for gammasonar
"""

from .filterbank_models import GammatoneSpec, FilterbankConfig, Filterbank
from .feature_models import FramingConfig, CompressionConfig, MfccConfig, EnergyMap, FeatureImage
from .audio_models import AudioClip, VesselClassProfile, ManifestEntry, DatasetManifest, DEFAULT_PROFILES
from .cnn_models import LayerSpec, Model, TrainConfig, AdamState, EpochRecord, TrainingHistory, TrainResult
from .eval_models import ConfusionMatrix, RocCurve, ClassScores, LatencyStats, EvalReport
from .run_config import RunConfig, DatasetConfig

__all__ = [
    'GammatoneSpec',
    'FilterbankConfig',
    'Filterbank',
    'FramingConfig',
    'CompressionConfig',
    'MfccConfig',
    'EnergyMap',
    'FeatureImage',
    'AudioClip',
    'VesselClassProfile',
    'ManifestEntry',
    'DatasetManifest',
    'DEFAULT_PROFILES',
    'LayerSpec',
    'Model',
    'TrainConfig',
    'AdamState',
    'EpochRecord',
    'TrainingHistory',
    'TrainResult',
    'ConfusionMatrix',
    'RocCurve',
    'ClassScores',
    'LatencyStats',
    'EvalReport',
    'RunConfig',
    'DatasetConfig'
]
