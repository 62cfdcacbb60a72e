"""
Layered CNN: construction, forward/backward passes, prediction, parameter
accounting and finite-difference gradient checking
"""

from typing import List, Tuple, Dict, Any, Sequence, Union
import numpy as np

from models.cnn_models import (
    LayerSpec, Model, CONV, RELU, MAXPOOL, GLOBAL_AVG_POOL, FULLY_CONNECTED, SOFTMAX
)
from models.feature_models import FeatureImage
from services import cnn_layers as L
from utils.error_handlers import ShapeError
from utils.logging_config import get_logger

logger = get_logger('cnn')

REFERENCE_CHANNELS = (32, 64, 128, 256, 512)
MIN_REFERENCE_INPUT = 32


def reference_layers(in_channels: int = 3, num_classes: int = 5) -> List[LayerSpec]:
    """7x7 stem, 5x5 then 3x3 stages, GAP, FC head"""
    c1, c2, c3, c4, c5 = REFERENCE_CHANNELS
    return [
        LayerSpec(CONV, in_channels, c1, kernel_size=7, stride=2, padding=3),
        LayerSpec(RELU),
        LayerSpec(MAXPOOL, kernel_size=2, stride=2),
        LayerSpec(CONV, c1, c2, kernel_size=5, stride=1, padding=2),
        LayerSpec(RELU),
        LayerSpec(MAXPOOL, kernel_size=2, stride=2),
        LayerSpec(CONV, c2, c3, kernel_size=3, stride=1, padding=1),
        LayerSpec(RELU),
        LayerSpec(MAXPOOL, kernel_size=2, stride=2),
        LayerSpec(CONV, c3, c4, kernel_size=3, stride=1, padding=1),
        LayerSpec(RELU),
        LayerSpec(MAXPOOL, kernel_size=2, stride=2),
        LayerSpec(CONV, c4, c5, kernel_size=3, stride=1, padding=1),
        LayerSpec(RELU),
        LayerSpec(GLOBAL_AVG_POOL),
        LayerSpec(FULLY_CONNECTED, c5, num_classes),
        LayerSpec(SOFTMAX),
    ]


def infer_shapes(layers: Sequence[LayerSpec], input_shape: Tuple[int, ...]) -> List[Tuple[int, ...]]:
    """Output shape of every layer for one sample; raises ShapeError on incompatibility"""
    shape = tuple(input_shape)
    shapes = []
    for index, layer in enumerate(layers):
        layer.validate()
        if layer.kind == CONV:
            if len(shape) != 3 or shape[0] != layer.in_channels:
                raise ShapeError(f"Layer {index} (conv) expects {layer.in_channels} input channels, got shape {shape}")
            h = L.conv_output_size(shape[1], layer.kernel_size, layer.stride, layer.padding)
            w = L.conv_output_size(shape[2], layer.kernel_size, layer.stride, layer.padding)
            if h < 1 or w < 1:
                raise ShapeError(f"Layer {index} (conv) input {shape[1]}x{shape[2]} is too small")
            shape = (layer.out_channels, h, w)
        elif layer.kind == MAXPOOL:
            if len(shape) != 3:
                raise ShapeError(f"Layer {index} (maxpool) needs a C x H x W input, got {shape}")
            h, w = shape[1] // layer.kernel_size, shape[2] // layer.kernel_size
            if h < 1 or w < 1:
                raise ShapeError(f"Layer {index} (maxpool) input {shape[1]}x{shape[2]} is too small for the pool chain")
            shape = (shape[0], h, w)
        elif layer.kind == GLOBAL_AVG_POOL:
            if len(shape) != 3:
                raise ShapeError(f"Layer {index} (global_avg_pool) needs a C x H x W input, got {shape}")
            shape = (shape[0],)
        elif layer.kind == FULLY_CONNECTED:
            if shape != (layer.in_channels,):
                raise ShapeError(f"Layer {index} (fully_connected) expects ({layer.in_channels},), got {shape}")
            shape = (layer.out_channels,)
        shapes.append(shape)
    return shapes


def init_parameters(layers: Sequence[LayerSpec], seed: int) -> List[Dict[str, np.ndarray]]:
    """
    Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero, drawn in layer order
    """
    rng = np.random.default_rng(seed)
    params = []
    for layer in layers:
        shapes = layer.parameter_shapes()
        if not shapes:
            params.append({})
            continue
        weight_shape = shapes['weight']
        fan_in = int(np.prod(weight_shape[1:]))
        bound = 1.0 / np.sqrt(fan_in)
        params.append({
            'weight': rng.uniform(-bound, bound, size=weight_shape),
            'bias': np.zeros(shapes['bias'])
        })
    return params


def build_model(layers: Sequence[LayerSpec], input_shape: Tuple[int, int, int], seed: int = 0) -> Model:
    shapes = infer_shapes(layers, input_shape)
    num_classes = shapes[-1][0] if shapes and len(shapes[-1]) == 1 else 0
    return Model(layers=list(layers), parameters=init_parameters(layers, seed),
                 input_shape=tuple(input_shape), num_classes=num_classes, rng_seed=seed)


def build_reference_model(input_shape: Tuple[int, int, int] = (224, 224, 3), num_classes: int = 5,
                          seed: int = 0) -> Model:
    """Reference large-kernel network for an H x W x C image"""
    h, w, c = input_shape
    if h < MIN_REFERENCE_INPUT or w < MIN_REFERENCE_INPUT:
        raise ShapeError(
            f"Input {h}x{w} is too small for the pool chain; need at least "
            f"{MIN_REFERENCE_INPUT}x{MIN_REFERENCE_INPUT}"
        )
    model = build_model(reference_layers(c, num_classes), (c, h, w), seed)
    logger.info(
        f"MODEL_BUILT - Input: {h}x{w}x{c} - Classes: {num_classes} - "
        f"Parameters: {count_parameters(model)} - Seed: {seed}"
    )
    return model


def count_parameters(model: Union[Model, Sequence[LayerSpec]]) -> int:
    layers = model.layers if isinstance(model, Model) else model
    return sum(layer.parameter_count() for layer in layers)


def model_footprint(model: Union[Model, Sequence[LayerSpec]]) -> Dict[str, Any]:
    """Parameter memory at float32/float64 and the float32 training footprint with Adam moments"""
    count = count_parameters(model)
    return {
        'parameters': count,
        'bytes_float32': count * 4,
        'bytes_float64': count * 8,
        'training_bytes_float32': count * 4 * 3,
        'megabytes_float32': count * 4 / 1e6,
        'training_megabytes_float32': count * 4 * 3 / 1e6,
    }


def forward(model: Model, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[Any]]:
    """
    Batch forward pass. Returns (probabilities, logits, caches); logits are the
    input of the final softmax layer.
    """
    out = np.asarray(x, dtype=np.float64)
    if out.ndim == 3:
        out = out[np.newaxis]
    if out.shape[1:] != tuple(model.input_shape):
        raise ShapeError(f"Model expects input {tuple(model.input_shape)}, got {out.shape[1:]}")

    caches = []
    logits = out
    for layer, params in zip(model.layers, model.parameters):
        if layer.kind == CONV:
            out, cache = L.conv2d_forward(out, params['weight'], params['bias'], layer.stride, layer.padding)
        elif layer.kind == RELU:
            out, cache = L.relu_forward(out)
        elif layer.kind == MAXPOOL:
            out, cache = L.maxpool_forward(out, layer.kernel_size, layer.stride)
        elif layer.kind == GLOBAL_AVG_POOL:
            out, cache = L.global_avg_pool_forward(out)
        elif layer.kind == FULLY_CONNECTED:
            out, cache = L.fully_connected_forward(out, params['weight'], params['bias'])
        else:
            logits = out
            out, cache = L.softmax(out), None
        caches.append(cache)
    if model.layers and model.layers[-1].kind != SOFTMAX:
        logits = out
    return out, logits, caches


def backward(model: Model, caches: List[Any], grad_logits: np.ndarray) -> List[Dict[str, np.ndarray]]:
    """Back-propagate d(loss)/d(logits); the softmax layer is folded into the loss gradient"""
    grads: List[Dict[str, np.ndarray]] = [{} for _ in model.layers]
    grad = grad_logits
    for index in range(len(model.layers) - 1, -1, -1):
        layer, cache = model.layers[index], caches[index]
        if layer.kind == SOFTMAX:
            continue
        if layer.kind == CONV:
            grad, gw, gb = L.conv2d_backward(grad, cache)
            grads[index] = {'weight': gw, 'bias': gb}
        elif layer.kind == RELU:
            grad = L.relu_backward(grad, cache)
        elif layer.kind == MAXPOOL:
            grad = L.maxpool_backward(grad, cache)
        elif layer.kind == GLOBAL_AVG_POOL:
            grad = L.global_avg_pool_backward(grad, cache)
        elif layer.kind == FULLY_CONNECTED:
            grad, gw, gb = L.fully_connected_backward(grad, cache)
            grads[index] = {'weight': gw, 'bias': gb}
    return grads


def flatten_grads(model: Model, grads: List[Dict[str, np.ndarray]]) -> List[np.ndarray]:
    """Gradients in the order of Model.parameter_arrays()"""
    flat = []
    for layer, g in zip(model.layers, grads):
        for name in layer.parameter_shapes():
            flat.append(g[name])
    return flat


def loss_and_gradients(model: Model, x: np.ndarray, targets: np.ndarray
                       ) -> Tuple[float, List[np.ndarray], np.ndarray]:
    """CCE loss, flat parameter gradients and probabilities for one batch"""
    probs, _, caches = forward(model, x)
    loss, grad_logits = L.cce_loss(probs, targets)
    grads = backward(model, caches, grad_logits)
    return loss, flatten_grads(model, grads), probs


def _image_input(image: Union[FeatureImage, np.ndarray]) -> np.ndarray:
    if isinstance(image, FeatureImage):
        return image.as_chw()
    arr = np.asarray(image, dtype=np.float64)
    # H x W x C images are turned channel-first
    if arr.ndim == 3 and arr.shape[-1] in (1, 3) and arr.shape[0] not in (1, 3):
        arr = arr.transpose(2, 0, 1)
    return arr


def predict(model: Model, image: Union[FeatureImage, np.ndarray]) -> np.ndarray:
    """Class probabilities for one image"""
    probs, _, _ = forward(model, _image_input(image))
    return probs[0]


def predict_batch(model: Model, images: np.ndarray, batch_size: int = 64) -> np.ndarray:
    """Probabilities for an (N, C, H, W) stack, evaluated in chunks"""
    chunks = [forward(model, images[i:i + batch_size])[0] for i in range(0, images.shape[0], batch_size)]
    return np.vstack(chunks) if chunks else np.zeros((0, model.num_classes))


def gradient_check(model: Model, x: np.ndarray, targets: np.ndarray, fraction: float = 0.05,
                   max_checks: int = 300, step: float = 1e-5, seed: int = 0) -> float:
    """
    Max relative error between analytic and central-difference gradients over a
    random subsample of parameters: |a - n| / max(|a| + |n|, 1e-5).
    """
    x = np.asarray(x, dtype=np.float64)
    targets = np.atleast_2d(targets)
    _, analytic, _ = loss_and_gradients(model, x, targets)
    params = model.parameter_arrays()

    sizes = np.array([p.size for p in params])
    total = int(sizes.sum())
    count = max(1, min(int(np.ceil(fraction * total)), max_checks))
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(total, size=count, replace=False))
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    worst = 0.0
    for flat_index in picks:
        which = int(np.searchsorted(offsets, flat_index, side='right') - 1)
        local = int(flat_index - offsets[which])
        param = params[which].reshape(-1)
        original = param[local]

        param[local] = original + step
        plus, _ = L.cce_loss(forward(model, x)[0], targets)
        param[local] = original - step
        minus, _ = L.cce_loss(forward(model, x)[0], targets)
        param[local] = original

        numeric = (plus - minus) / (2.0 * step)
        a = float(analytic[which].reshape(-1)[local])
        error = abs(a - numeric) / max(abs(a) + abs(numeric), 1e-5)
        worst = max(worst, error)

    logger.info(f"GRADIENT_CHECK - Checked: {count} of {total} - Max relative error: {worst:.3e}")
    return worst
