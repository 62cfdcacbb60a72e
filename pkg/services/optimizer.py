"""
Adam with bias correction, updating parameter arrays in place
"""

from typing import List, Tuple
import numpy as np

from models.cnn_models import AdamState, TrainConfig
from utils.error_handlers import ShapeError


def adam_step(params: List[np.ndarray], grads: List[np.ndarray], state: AdamState,
              config: TrainConfig) -> Tuple[List[np.ndarray], AdamState]:
    if not (len(params) == len(grads) == len(state.first_moment) == len(state.second_moment)):
        raise ShapeError(
            f"Adam received {len(params)} parameters, {len(grads)} gradients and "
            f"{len(state.first_moment)} moment buffers"
        )
    for index, (p, g, m) in enumerate(zip(params, grads, state.first_moment)):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"Parameter {index} has shape {p.shape}, gradient {g.shape}, moment {m.shape}")

    state.step += 1
    beta1, beta2 = config.adam_beta1, config.adam_beta2
    # Bias corrections once per step
    bc1 = 1.0 - beta1 ** state.step
    bc2 = 1.0 - beta2 ** state.step
    step_size = config.learning_rate / bc1

    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= step_size * m / (np.sqrt(v / bc2) + config.adam_epsilon)
    return params, state
