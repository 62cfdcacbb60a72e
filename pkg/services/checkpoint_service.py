"""
Binary checkpoints: b"GTCN", <u4 version, <u4 header length, JSON header,
then little-endian float64 parameters and Adam moments in layer order
"""

import os
import json
import struct
from typing import Optional, Tuple, Dict, Any, List
import numpy as np

from models.cnn_models import Model, LayerSpec, AdamState
from utils.error_handlers import CheckpointError, CheckpointFormatError, CheckpointVersionError, CheckpointTruncatedError
from utils.logging_config import get_logger

logger = get_logger('checkpoint')

MAGIC = b'GTCN'
FORMAT_VERSION = 1
_PREFIX = struct.Struct('<4sII')


def _header(model: Model, state: Optional[AdamState]) -> Dict[str, Any]:
    return {
        'layers': [layer.to_dict() for layer in model.layers],
        'input_shape': list(model.input_shape),
        'num_classes': model.num_classes,
        'rng_seed': model.rng_seed,
        'parameter_shapes': [list(p.shape) for p in model.parameter_arrays()],
        'optimizer': None if state is None else {'step': state.step}
    }


def save_checkpoint(model: Model, state: Optional[AdamState], path: str) -> str:
    header = json.dumps(_header(model, state), sort_keys=True).encode('utf-8')
    buffers = list(model.parameter_arrays())
    if state is not None:
        buffers += list(state.first_moment) + list(state.second_moment)
    try:
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        with open(path, 'wb') as fh:
            fh.write(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)))
            fh.write(header)
            for buf in buffers:
                fh.write(np.ascontiguousarray(buf, dtype='<f8').tobytes())
    except OSError as e:
        raise CheckpointError(f"Cannot write checkpoint {path}: {e}", details={'path': path})
    logger.info(f"CHECKPOINT_SAVED - Path: {path} - Buffers: {len(buffers)} - Optimizer: {state is not None}")
    return path


def _read(path: str) -> Tuple[Model, Optional[AdamState]]:
    try:
        with open(path, 'rb') as fh:
            data = fh.read()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}", details={'path': path})

    if len(data) < 4 or data[:4] != MAGIC:
        raise CheckpointFormatError(f"{path} is not a checkpoint (bad magic)", details={'path': path})
    if len(data) < _PREFIX.size:
        raise CheckpointTruncatedError(f"{path} ends inside the file prefix", details={'path': path})
    _, version, header_len = _PREFIX.unpack_from(data)
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path} has format version {version}, this build reads version {FORMAT_VERSION}",
            details={'path': path, 'version': version}
        )
    offset = _PREFIX.size
    if len(data) < offset + header_len:
        raise CheckpointTruncatedError(f"{path} ends inside the JSON header", details={'path': path})
    try:
        header = json.loads(data[offset:offset + header_len].decode('utf-8'))
        layers = [LayerSpec.from_dict(d) for d in header['layers']]
        shapes = [tuple(s) for s in header['parameter_shapes']]
        input_shape = tuple(int(v) for v in header['input_shape'])
        num_classes = int(header['num_classes'])
        rng_seed = int(header['rng_seed'])
        optimizer = header.get('optimizer')
        step = int(optimizer['step']) if optimizer is not None else 0
    except (ValueError, KeyError, TypeError, AttributeError) as e:
        raise CheckpointFormatError(f"{path} has a corrupted header: {e}", details={'path': path})
    offset += header_len
    declared = [tuple(s) for layer in layers for s in layer.parameter_shapes().values()]
    if declared != shapes:
        raise CheckpointFormatError(f"{path}: parameter shapes disagree with the layer list", details={'path': path})

    with_optimizer = optimizer is not None
    groups = 3 if with_optimizer else 1
    needed = groups * sum(int(np.prod(s)) for s in shapes) * 8
    if len(data) - offset < needed:
        raise CheckpointTruncatedError(
            f"{path} holds {len(data) - offset} payload bytes, expected {needed}",
            details={'path': path}
        )
    if len(data) - offset > needed:
        raise CheckpointFormatError(f"{path} has trailing bytes after the payload", details={'path': path})

    def take(shape) -> np.ndarray:
        nonlocal offset
        count = int(np.prod(shape))
        arr = np.frombuffer(data, dtype='<f8', count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += count * 8
        return arr

    flat = [take(s) for s in shapes]
    state = None
    if with_optimizer:
        first = [take(s) for s in shapes]
        second = [take(s) for s in shapes]
        state = AdamState(first_moment=first, second_moment=second, step=step)

    parameters: List[Dict[str, np.ndarray]] = []
    cursor = 0
    for layer in layers:
        entry = {}
        for name in layer.parameter_shapes():
            entry[name] = flat[cursor]
            cursor += 1
        parameters.append(entry)

    model = Model(layers=layers, parameters=parameters, input_shape=input_shape,
                  num_classes=num_classes, rng_seed=rng_seed)
    logger.info(f"CHECKPOINT_LOADED - Path: {path} - Layers: {len(layers)} - Optimizer: {with_optimizer}")
    return model, state


def load_checkpoint(path: str) -> Model:
    return _read(path)[0]


def load_training_state(path: str) -> Tuple[Model, Optional[AdamState]]:
    """Model plus the Adam state saved with it, if any"""
    return _read(path)
