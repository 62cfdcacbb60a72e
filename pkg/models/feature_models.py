"""
Data models for cochleagram and MFCC feature extraction
"""

from dataclasses import dataclass, field, asdict
from typing import Dict, Any, Optional
import numpy as np

from utils.error_handlers import ConfigError

FRONTEND_GAMMATONE = 'gammatone'
FRONTEND_MFCC = 'mfcc'
FRONTENDS = (FRONTEND_GAMMATONE, FRONTEND_MFCC)


def _at_least_one_sample(name: str, seconds: float, sample_rate: int) -> int:
    count = int(round(seconds * sample_rate))
    if count < 1:
        raise ConfigError(f"{name}={seconds} s is shorter than one sample at {sample_rate} Hz",
                          details={'field': name, 'sample_rate': sample_rate})
    return count


@dataclass(frozen=True)
class FramingConfig:
    """Frame integration window (seconds) and hop (seconds)"""
    window_len: float = 0.025
    hop: float = 0.010
    window_shape: str = 'hann'

    def validate(self, sample_rate: Optional[int] = None) -> 'FramingConfig':
        if not 0 < self.hop <= self.window_len:
            raise ConfigError(f"Require 0 < hop <= window_len, got hop={self.hop}, window_len={self.window_len}")
        if sample_rate is not None:
            self.window_samples(sample_rate)
            self.hop_samples(sample_rate)
        return self

    def window_samples(self, sample_rate: int) -> int:
        return _at_least_one_sample('window_len', self.window_len, sample_rate)

    def hop_samples(self, sample_rate: int) -> int:
        return _at_least_one_sample('hop', self.hop, sample_rate)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FramingConfig':
        return cls(**data).validate()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class CompressionConfig:
    """Log dynamic-range compression scale"""
    alpha: float = 1e3

    def validate(self) -> 'CompressionConfig':
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CompressionConfig':
        return cls(**data).validate()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MfccConfig:
    """MFCC baseline front-end settings"""
    num_mel: int = 64
    num_coefficients: int = 20
    f_min: float = 50.0
    f_max: float = 8000.0
    log_floor: float = 1e-10

    def validate(self) -> 'MfccConfig':
        if self.num_mel < 2:
            raise ConfigError(f"num_mel must be at least 2, got {self.num_mel}")
        if not 1 <= self.num_coefficients <= self.num_mel:
            raise ConfigError(
                f"num_coefficients must lie in [1, num_mel], got {self.num_coefficients}"
            )
        if not 0 <= self.f_min < self.f_max:
            raise ConfigError(f"Require 0 <= f_min < f_max, got {self.f_min}, {self.f_max}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'MfccConfig':
        return cls(**data).validate()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class EnergyMap:
    """Frame energies E[f, t], channel-major"""
    values: np.ndarray = field(repr=False)
    frame_rate: float = 100.0

    @property
    def num_channels(self) -> int:
        return int(self.values.shape[0])

    @property
    def num_frames(self) -> int:
        return int(self.values.shape[1])


@dataclass
class FeatureImage:
    """H x W x 3 image with intensities in [0, 1]"""
    pixels: np.ndarray = field(repr=False)
    frontend: str = FRONTEND_GAMMATONE
    config_hash: str = ''
    source_file: Optional[str] = None

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def channels(self) -> int:
        return int(self.pixels.shape[2])

    def sidecar(self) -> Dict[str, Any]:
        """JSON sidecar describing the raw tensor file"""
        return {
            'height': self.height,
            'width': self.width,
            'channels': self.channels,
            'frontend': self.frontend,
            'config_hash': self.config_hash,
            'source_file': self.source_file
        }

    def as_chw(self) -> np.ndarray:
        """Channel-first float64 view for the CNN"""
        return np.ascontiguousarray(self.pixels.transpose(2, 0, 1), dtype=np.float64)
