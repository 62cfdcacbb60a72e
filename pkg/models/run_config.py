"""
Run configuration: the JSON document every CLI command reads
"""

import json
import hashlib
from dataclasses import dataclass, field, fields, asdict, replace
from typing import Dict, Any, Optional, Tuple, Iterable

from models.filterbank_models import FilterbankConfig
from models.feature_models import FramingConfig, CompressionConfig, MfccConfig, FRONTENDS, FRONTEND_GAMMATONE
from models.cnn_models import TrainConfig
from utils.error_handlers import ConfigError, GammasonarError


@dataclass(frozen=True)
class DatasetConfig:
    """Synthetic corpus and directory settings"""
    data_dir: str = 'data'
    features_dir: str = 'features'
    per_class: int = 200
    duration: float = 4.0
    segment_window: float = 4.0
    split_fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    snr_min: Optional[float] = None
    snr_max: Optional[float] = None

    def validate(self) -> 'DatasetConfig':
        if self.per_class < 1:
            raise ConfigError(f"per_class must be at least 1, got {self.per_class}")
        if self.duration <= 0 or self.segment_window <= 0:
            raise ConfigError("duration and segment_window must be positive")
        if len(self.split_fractions) != 3 or any(f < 0 for f in self.split_fractions):
            raise ConfigError(f"split_fractions must be three non-negative numbers, got {self.split_fractions}")
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ConfigError(f"split_fractions must sum to 1, got {self.split_fractions}")
        if (self.snr_min is None) != (self.snr_max is None):
            raise ConfigError("snr_min and snr_max must be given together")
        if self.snr_min is not None and self.snr_min > self.snr_max:
            raise ConfigError(f"snr_min {self.snr_min} exceeds snr_max {self.snr_max}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DatasetConfig':
        data = dict(data)
        if 'split_fractions' in data:
            data['split_fractions'] = tuple(float(v) for v in data['split_fractions'])
        return cls(**data).validate()

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['split_fractions'] = list(self.split_fractions)
        return data


SECTIONS = {
    'filterbank': FilterbankConfig,
    'framing': FramingConfig,
    'compression': CompressionConfig,
    'mfcc': MfccConfig,
    'train': TrainConfig,
    'dataset': DatasetConfig,
}
TOP_LEVEL_KEYS = ('frontend', 'image_size', 'seed')

# Sections that change the content of a feature file
FEATURE_SECTIONS = ('filterbank', 'framing', 'compression', 'mfcc')


def _reject_unknown(section: str, data: Dict[str, Any], allowed: Iterable[str]):
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        where = f"section '{section}'" if section else "top level"
        raise ConfigError(f"Unknown config keys at {where}: {', '.join(unknown)}",
                          details={'section': section or None, 'keys': unknown})


@dataclass(frozen=True)
class RunConfig:
    filterbank: FilterbankConfig = field(default_factory=FilterbankConfig)
    framing: FramingConfig = field(default_factory=FramingConfig)
    compression: CompressionConfig = field(default_factory=CompressionConfig)
    mfcc: MfccConfig = field(default_factory=MfccConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    frontend: str = FRONTEND_GAMMATONE
    image_size: Tuple[int, int] = (64, 64)
    seed: int = 0

    def validate(self) -> 'RunConfig':
        if self.frontend not in FRONTENDS:
            raise ConfigError(f"frontend must be one of {FRONTENDS}, got '{self.frontend}'")
        if len(self.image_size) != 2 or min(self.image_size) < 32:
            raise ConfigError(f"image_size must be two integers of at least 32, got {self.image_size}")
        for name in SECTIONS:
            getattr(self, name).validate()
        self.framing.validate(self.filterbank.sample_rate)
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'RunConfig':
        if not isinstance(data, dict):
            raise ConfigError("Run config must be a JSON object")
        _reject_unknown('', data, list(SECTIONS) + list(TOP_LEVEL_KEYS))

        kwargs = {}
        for name, section_cls in SECTIONS.items():
            if name not in data:
                continue
            section = data[name]
            if not isinstance(section, dict):
                raise ConfigError(f"Section '{name}' must be a JSON object")
            _reject_unknown(name, section, [f.name for f in fields(section_cls)])
            try:
                kwargs[name] = section_cls.from_dict(section)
            except GammasonarError:
                raise
            except (TypeError, ValueError) as e:
                raise ConfigError(f"Invalid section '{name}': {e}", details={'section': name})
        if 'frontend' in data:
            kwargs['frontend'] = str(data['frontend'])
        try:
            if 'image_size' in data:
                kwargs['image_size'] = tuple(int(v) for v in data['image_size'])
            if 'seed' in data:
                kwargs['seed'] = int(data['seed'])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"image_size and seed must be integers: {e}")
        return cls(**kwargs).validate()

    @classmethod
    def from_json_text(cls, text: str) -> 'RunConfig':
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"Invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}",
                details={'line': e.lineno, 'column': e.colno}
            )
        return cls.from_dict(data)

    @classmethod
    def from_json_file(cls, path: str) -> 'RunConfig':
        try:
            with open(path, 'r', encoding='utf-8') as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}", details={'path': path})
        return cls.from_json_text(text)

    def with_overrides(self, **overrides) -> 'RunConfig':
        """Apply CLI flag values; None means 'flag not given'. Dotted keys address sections."""
        top, sections = {}, {}
        for key, value in overrides.items():
            if value is None:
                continue
            if '.' in key:
                section, name = key.split('.', 1)
                sections.setdefault(section, {})[name] = value
            else:
                top[key] = value
        updated = self
        for section, values in sections.items():
            current = getattr(updated, section)
            updated = replace(updated, **{section: replace(current, **values)})
        if top:
            updated = replace(updated, **top)
        return updated.validate()

    def to_dict(self) -> Dict[str, Any]:
        data = {name: getattr(self, name).to_dict() for name in SECTIONS}
        data['frontend'] = self.frontend
        data['image_size'] = list(self.image_size)
        data['seed'] = self.seed
        return data

    def config_hash(self, section_names: Iterable[str] = FEATURE_SECTIONS, extra: Dict[str, Any] = None) -> str:
        """Stable md5 of the named sections, sorted-key JSON"""
        document = self.to_dict()
        payload = {name: document[name] for name in section_names}
        if extra:
            payload.update(extra)
        return hashlib.md5(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def feature_hash(self) -> str:
        """Hash of every setting that changes a feature file"""
        return self.config_hash(FEATURE_SECTIONS, {'frontend': self.frontend, 'image_size': list(self.image_size)})
