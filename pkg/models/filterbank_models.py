"""
Data models for the ERB-spaced gammatone filterbank
"""

from dataclasses import dataclass, field, asdict
from typing import List, Dict, Any, Tuple
import numpy as np

from utils.error_handlers import ConfigError

# Scales b against ERB(fc) so a 4th-order filter's equivalent rectangular
# bandwidth equals ERB(fc)
ERB_BANDWIDTH_FACTOR = 1.019


@dataclass(frozen=True)
class GammatoneSpec:
    """One gammatone channel: centre frequency, order, bandwidth, phase, amplitude"""
    fc: float
    order: int = 4
    b: float = 1.0
    phase: float = 0.0
    amplitude: float = 1.0

    def validate(self) -> 'GammatoneSpec':
        if self.fc <= 0:
            raise ConfigError(f"Gammatone centre frequency must be positive, got {self.fc}")
        if self.order < 1:
            raise ConfigError(f"Gammatone order must be at least 1, got {self.order}")
        if self.b <= 0:
            raise ConfigError(f"Gammatone bandwidth must be positive, got {self.b}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class FilterbankConfig:
    """Filterbank design parameters"""
    num_filters: int = 64
    f_min: float = 50.0
    f_max: float = 8000.0
    sample_rate: int = 16000
    order: int = 4
    fir_length: int = 2048
    bandwidth_factor: float = ERB_BANDWIDTH_FACTOR

    def validate(self) -> 'FilterbankConfig':
        if self.num_filters < 1:
            raise ConfigError(f"num_filters must be at least 1, got {self.num_filters}")
        if not 0 < self.f_min < self.f_max:
            raise ConfigError(f"Require 0 < f_min < f_max, got f_min={self.f_min}, f_max={self.f_max}")
        if self.f_max > self.sample_rate / 2:
            raise ConfigError(
                f"f_max={self.f_max} Hz exceeds Nyquist ({self.sample_rate / 2} Hz)"
            )
        if self.fir_length < 2:
            raise ConfigError(f"fir_length must be at least 2, got {self.fir_length}")
        if self.order < 1:
            raise ConfigError(f"order must be at least 1, got {self.order}")
        if self.bandwidth_factor <= 0:
            raise ConfigError(f"bandwidth_factor must be positive, got {self.bandwidth_factor}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'FilterbankConfig':
        return cls(**data).validate()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class Filterbank:
    """Immutable bank of FIR kernels, one per GammatoneSpec, ascending in fc"""
    specs: Tuple[GammatoneSpec, ...]
    kernels: np.ndarray = field(repr=False)
    config: FilterbankConfig = field(default_factory=FilterbankConfig)

    def __post_init__(self):
        # Shared across threads, so freeze the buffer
        self.kernels.setflags(write=False)

    @property
    def num_filters(self) -> int:
        return len(self.specs)

    @property
    def sample_rate(self) -> int:
        return self.config.sample_rate

    @property
    def center_frequencies(self) -> np.ndarray:
        return np.array([spec.fc for spec in self.specs])

    def metadata_rows(self) -> List[Dict[str, Any]]:
        """Per-filter metadata for CSV export"""
        from services.filterbank_service import erb_bandwidth
        return [
            {'index': i, 'fc': spec.fc, 'b': spec.b, 'order': spec.order, 'erb': erb_bandwidth(spec.fc)}
            for i, spec in enumerate(self.specs)
        ]
