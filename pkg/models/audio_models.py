"""
Data models for audio clips, vessel class profiles and dataset manifests
"""

from dataclasses import dataclass, field, asdict, replace
from typing import List, Optional, Dict, Any, Tuple
import numpy as np

from utils.error_handlers import ConfigError, DatasetError

CLASS_NAMES = ('Background', 'Cargo', 'Passengership', 'Tanker', 'Tug')
NUM_CLASSES = len(CLASS_NAMES)

SPLIT_TRAIN = 'train'
SPLIT_VAL = 'val'
SPLIT_TEST = 'test'
SPLITS = (SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST)

AMBIENT_PINK = 'pink'
AMBIENT_WHITE = 'white'
AMBIENT_KINDS = (AMBIENT_PINK, AMBIENT_WHITE)


@dataclass
class AudioClip:
    """Mono sample buffer with its rate, optional class label and provenance"""
    samples: np.ndarray = field(repr=False)
    sample_rate: int
    label: Optional[int] = None
    source: str = ''

    @property
    def num_samples(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        return self.num_samples / float(self.sample_rate)

    def with_samples(self, samples: np.ndarray, sample_rate: int = None) -> 'AudioClip':
        return replace(self, samples=samples, sample_rate=sample_rate or self.sample_rate)


def _check_interval(name: str, interval: Tuple[float, float], nyquist: float):
    lo, hi = interval
    if lo > hi:
        raise ConfigError(f"{name} interval is empty: {interval}")
    if lo < 0 or hi > nyquist:
        raise ConfigError(f"{name} interval {interval} lies outside [0, {nyquist}] Hz")


@dataclass(frozen=True)
class VesselClassProfile:
    """Acoustic recipe for one synthetic vessel class"""
    class_id: int
    name: str
    f0_range: Tuple[float, float] = (0.0, 0.0)
    num_harmonics: int = 0
    harmonic_decay: float = 0.8
    am_rate_range: Tuple[float, float] = (0.0, 0.0)
    am_depth: float = 0.0
    # None: unfiltered white noise up to Nyquist
    broadband_band: Optional[Tuple[float, float]] = (100.0, 2000.0)
    broadband_level: float = 0.3
    snr_range: Tuple[float, float] = (0.0, 15.0)
    ambient_noise: str = AMBIENT_PINK

    def validate(self, sample_rate: int) -> 'VesselClassProfile':
        nyquist = sample_rate / 2.0
        if not 0 <= self.class_id < NUM_CLASSES:
            raise ConfigError(f"class_id must lie in 0..{NUM_CLASSES - 1}, got {self.class_id}")
        if self.name not in CLASS_NAMES:
            raise ConfigError(f"Unknown class name '{self.name}', expected one of {CLASS_NAMES}")
        _check_interval('f0_range', self.f0_range, nyquist)
        _check_interval('am_rate_range', self.am_rate_range, nyquist)
        if self.broadband_band is not None:
            _check_interval('broadband_band', self.broadband_band, nyquist)
        if self.ambient_noise not in AMBIENT_KINDS:
            raise ConfigError(f"ambient_noise must be one of {AMBIENT_KINDS}, got '{self.ambient_noise}'")
        if self.snr_range[0] > self.snr_range[1]:
            raise ConfigError(f"snr_range interval is empty: {self.snr_range}")
        if self.name == 'Background' and self.num_harmonics != 0:
            raise ConfigError("Background profile must not carry harmonics")
        if self.num_harmonics < 0:
            raise ConfigError(f"num_harmonics must be non-negative, got {self.num_harmonics}")
        if self.num_harmonics > 0 and self.f0_range[0] <= 0:
            raise ConfigError(f"{self.name}: harmonic profiles need a positive f0 range")
        if not 0 <= self.am_depth <= 1:
            raise ConfigError(f"am_depth must lie in [0, 1], got {self.am_depth}")
        return self

    def with_snr_range(self, snr_min: float, snr_max: float) -> 'VesselClassProfile':
        return replace(self, snr_range=(float(snr_min), float(snr_max)))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'VesselClassProfile':
        data = dict(data)
        for key in ('f0_range', 'am_rate_range', 'broadband_band', 'snr_range'):
            if data.get(key) is not None:
                data[key] = tuple(float(v) for v in data[key])
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


DEFAULT_PROFILES: Tuple[VesselClassProfile, ...] = (
    VesselClassProfile(
        class_id=0, name='Background',
        num_harmonics=0,
        broadband_band=None, broadband_level=1.0,
        ambient_noise=AMBIENT_WHITE,
    ),
    VesselClassProfile(
        class_id=1, name='Cargo',
        f0_range=(50.0, 80.0), num_harmonics=12, harmonic_decay=0.85,
        am_rate_range=(1.0, 2.0), am_depth=0.3,
        broadband_band=(300.0, 2000.0), broadband_level=0.3,
    ),
    VesselClassProfile(
        class_id=2, name='Passengership',
        f0_range=(100.0, 160.0), num_harmonics=8, harmonic_decay=0.75,
        am_rate_range=(2.0, 4.0), am_depth=0.3,
        broadband_band=(500.0, 3000.0), broadband_level=0.3,
    ),
    VesselClassProfile(
        class_id=3, name='Tanker',
        f0_range=(40.0, 60.0), num_harmonics=15, harmonic_decay=0.85,
        am_rate_range=(1.0, 3.0), am_depth=0.5,
        broadband_band=(200.0, 1500.0), broadband_level=0.3,
    ),
    VesselClassProfile(
        class_id=4, name='Tug',
        f0_range=(70.0, 110.0), num_harmonics=10, harmonic_decay=0.8,
        am_rate_range=(4.0, 8.0), am_depth=0.8,
        broadband_band=(100.0, 6000.0), broadband_level=0.6,
    ),
)


@dataclass(frozen=True)
class ManifestEntry:
    """One synthesized recording"""
    path: str
    class_id: int
    split: str
    duration: float
    snr: float

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ManifestEntry':
        try:
            return cls(
                path=str(data['path']),
                class_id=int(data['class_id']),
                split=str(data['split']),
                duration=float(data['duration']),
                snr=float(data['snr'])
            )
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetError(f"Malformed manifest entry {data!r}: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DatasetManifest:
    """Entries plus the seed and split fractions that produced them"""
    entries: List[ManifestEntry]
    seed: int
    split_fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    profiles: List[Dict[str, Any]] = field(default_factory=list)
    sample_rate: int = 16000
    root: str = '.'

    def validate(self) -> 'DatasetManifest':
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise DatasetError(f"Split fractions must sum to 1, got {self.split_fractions}")
        if any(f < 0 for f in self.split_fractions):
            raise DatasetError(f"Split fractions must be non-negative, got {self.split_fractions}")
        for entry in self.entries:
            if entry.split not in SPLITS:
                raise DatasetError(f"Unknown split tag '{entry.split}' for {entry.path}")
            if not 0 <= entry.class_id < NUM_CLASSES:
                raise DatasetError(f"Class id {entry.class_id} out of range for {entry.path}")
        return self

    def split_entries(self, split: str) -> List[ManifestEntry]:
        return [entry for entry in self.entries if entry.split == split]

    def header(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'fractions': list(self.split_fractions),
            'profiles': self.profiles,
            'sample_rate': self.sample_rate
        }
