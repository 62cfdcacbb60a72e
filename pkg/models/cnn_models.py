"""
Data models for the CNN engine: layer specs, parameters, optimizer state, training history
"""

from dataclasses import dataclass, field, asdict
from typing import List, Optional, Dict, Any, Tuple
import numpy as np

from utils.error_handlers import ConfigError

CONV = 'conv'
RELU = 'relu'
MAXPOOL = 'maxpool'
GLOBAL_AVG_POOL = 'global_avg_pool'
FULLY_CONNECTED = 'fully_connected'
SOFTMAX = 'softmax'
LAYER_KINDS = (CONV, RELU, MAXPOOL, GLOBAL_AVG_POOL, FULLY_CONNECTED, SOFTMAX)


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the network; kind-specific fields are ignored by other kinds"""
    kind: str
    in_channels: int = 0
    out_channels: int = 0
    kernel_size: int = 1
    stride: int = 1
    padding: int = 0

    def validate(self) -> 'LayerSpec':
        if self.kind not in LAYER_KINDS:
            raise ConfigError(f"Unknown layer kind '{self.kind}'")
        if self.kind in (CONV, FULLY_CONNECTED):
            if self.in_channels < 1 or self.out_channels < 1:
                raise ConfigError(f"{self.kind} needs at least one input and output channel")
        if self.kind in (CONV, MAXPOOL):
            if self.kernel_size < 1 or self.stride < 1 or self.padding < 0:
                raise ConfigError(
                    f"{self.kind}: invalid kernel_size={self.kernel_size}, "
                    f"stride={self.stride}, padding={self.padding}"
                )
        return self

    @property
    def has_parameters(self) -> bool:
        return self.kind in (CONV, FULLY_CONNECTED)

    def parameter_shapes(self) -> Dict[str, Tuple[int, ...]]:
        if self.kind == CONV:
            return {
                'weight': (self.out_channels, self.in_channels, self.kernel_size, self.kernel_size),
                'bias': (self.out_channels,)
            }
        if self.kind == FULLY_CONNECTED:
            return {'weight': (self.out_channels, self.in_channels), 'bias': (self.out_channels,)}
        return {}

    def parameter_count(self) -> int:
        return int(sum(np.prod(shape) for shape in self.parameter_shapes().values()))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'LayerSpec':
        return cls(**data).validate()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class Model:
    """Layer plan plus per-layer parameter tensors"""
    layers: List[LayerSpec]
    parameters: List[Dict[str, np.ndarray]] = field(repr=False)
    input_shape: Tuple[int, int, int] = (3, 64, 64)
    num_classes: int = 5
    rng_seed: int = 0

    def parameter_arrays(self) -> List[np.ndarray]:
        """Flat list of parameter tensors in layer order, weight before bias"""
        arrays = []
        for layer, params in zip(self.layers, self.parameters):
            for name in layer.parameter_shapes():
                arrays.append(params[name])
        return arrays

    def copy(self) -> 'Model':
        return Model(
            layers=list(self.layers),
            parameters=[{k: v.copy() for k, v in p.items()} for p in self.parameters],
            input_shape=self.input_shape,
            num_classes=self.num_classes,
            rng_seed=self.rng_seed
        )


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and loop settings"""
    learning_rate: float = 1e-4
    batch_size: int = 32
    epochs: int = 30
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def validate(self) -> 'TrainConfig':
        if not np.isfinite(self.learning_rate) or self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be non-negative, got {self.epochs}")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ConfigError("Adam betas must lie in [0, 1)")
        if self.adam_epsilon <= 0:
            raise ConfigError(f"adam_epsilon must be positive, got {self.adam_epsilon}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainConfig':
        return cls(**data).validate()

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class AdamState:
    """First/second moments mirroring the parameter list, plus the step counter"""
    first_moment: List[np.ndarray] = field(repr=False)
    second_moment: List[np.ndarray] = field(repr=False)
    step: int = 0

    @classmethod
    def zeros_like(cls, params: List[np.ndarray]) -> 'AdamState':
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            step=0
        )


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_acc: float
    train_acc: float = float('nan')


@dataclass
class TrainingHistory:
    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    best_val_acc: Optional[float] = None

    CSV_HEADER = ('epoch', 'train_loss', 'val_loss', 'val_acc')

    def csv_rows(self) -> List[Tuple]:
        return [(r.epoch, r.train_loss, r.val_loss, r.val_acc) for r in self.records]


@dataclass
class TrainResult:
    """Best-validation checkpoint plus the full history"""
    model: Model
    optimizer_state: AdamState
    history: TrainingHistory
