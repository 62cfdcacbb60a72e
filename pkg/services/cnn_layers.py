"""
Tensor operations for the CNN, forward and backward, on NCHW float64 arrays.

Every forward returns (output, cache); the matching backward takes the
upstream gradient and that cache.
"""

from typing import Tuple, Any
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from utils.error_handlers import ShapeError, DomainError


def _as_batch(x: np.ndarray, rank: int) -> Tuple[np.ndarray, bool]:
    """Accept a single sample by adding a leading batch axis"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == rank - 1:
        return x[np.newaxis], True
    if x.ndim != rank:
        raise ShapeError(f"Expected a {rank - 1}-D sample or {rank}-D batch, got shape {x.shape}")
    return x, False


def conv_output_size(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def conv2d_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray,
                   stride: int = 1, padding: int = 0) -> Tuple[np.ndarray, Any]:
    """Cross-correlation plus bias: (N, C, H, W) * (O, C, k, k) -> (N, O, H', W')"""
    x, single = _as_batch(x, 4)
    if weights.ndim != 4 or weights.shape[2] != weights.shape[3]:
        raise ShapeError(f"Conv weights must be O x C x k x k, got {weights.shape}")
    out_ch, in_ch, k, _ = weights.shape
    if x.shape[1] != in_ch:
        raise ShapeError(f"Conv input has {x.shape[1]} channels, weights expect {in_ch}")
    if bias.shape != (out_ch,):
        raise ShapeError(f"Conv bias must have shape ({out_ch},), got {bias.shape}")
    if stride < 1 or padding < 0:
        raise ShapeError(f"Invalid stride={stride} or padding={padding}")
    h, w = x.shape[2], x.shape[3]
    if h + 2 * padding < k or w + 2 * padding < k:
        raise ShapeError(f"Conv input {h}x{w} with padding {padding} is smaller than the {k}x{k} kernel")

    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.tensordot(windows, weights, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    out = out + bias[np.newaxis, :, np.newaxis, np.newaxis]
    cache = (windows, xp.shape, x.shape, weights, stride, padding, single)
    return (out[0] if single else np.ascontiguousarray(out)), cache


def conv2d_backward(grad_out: np.ndarray, cache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (grad_input, grad_weights, grad_bias)"""
    windows, padded_shape, input_shape, weights, stride, padding, single = cache
    grad_out, _ = _as_batch(grad_out, 4)
    expected = (windows.shape[0], weights.shape[0], windows.shape[2], windows.shape[3])
    if grad_out.shape != expected:
        raise ShapeError(f"Conv grad_out has shape {grad_out.shape}, forward produced {expected}")

    k = weights.shape[2]
    out_h, out_w = grad_out.shape[2], grad_out.shape[3]
    grad_b = grad_out.sum(axis=(0, 2, 3))
    grad_w = np.tensordot(grad_out, windows, axes=([0, 2, 3], [0, 2, 3]))

    grad_xp = np.zeros(padded_shape)
    for i in range(k):
        for j in range(k):
            contribution = np.einsum('nohw,oc->nchw', grad_out, weights[:, :, i, j])
            grad_xp[:, :, i:i + stride * out_h:stride, j:j + stride * out_w:stride] += contribution
    h, w = input_shape[2], input_shape[3]
    grad_x = grad_xp[:, :, padding:padding + h, padding:padding + w]
    return (grad_x[0] if single else grad_x), grad_w, grad_b


def relu_forward(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mask = x > 0
    return np.where(mask, x, 0.0), mask


def relu_backward(grad_out: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if grad_out.shape != mask.shape:
        raise ShapeError(f"ReLU grad shape {grad_out.shape} does not match input {mask.shape}")
    return np.where(mask, grad_out, 0.0)


def maxpool_forward(x: np.ndarray, kernel: int = 2, stride: int = 2) -> Tuple[np.ndarray, Any]:
    """
    Non-overlapping max pooling. Ties go to the row-major earliest element;
    trailing rows/columns that do not fill a window are dropped.
    """
    if kernel != stride:
        raise ShapeError(f"Only non-overlapping pooling is supported, got kernel={kernel}, stride={stride}")
    x, single = _as_batch(x, 4)
    n, c, h, w = x.shape
    out_h, out_w = h // kernel, w // kernel
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"Max-pool input {h}x{w} is smaller than the {kernel}x{kernel} window")

    cropped = x[:, :, :out_h * kernel, :out_w * kernel]
    blocks = cropped.reshape(n, c, out_h, kernel, out_w, kernel).transpose(0, 1, 2, 4, 3, 5)
    blocks = blocks.reshape(n, c, out_h, out_w, kernel * kernel)
    argmax = np.argmax(blocks, axis=-1)
    out = np.take_along_axis(blocks, argmax[..., np.newaxis], axis=-1)[..., 0]
    cache = (argmax, x.shape, kernel, single)
    return (out[0] if single else out), cache


def maxpool_backward(grad_out: np.ndarray, cache) -> np.ndarray:
    argmax, input_shape, kernel, single = cache
    grad_out, _ = _as_batch(grad_out, 4)
    if grad_out.shape != argmax.shape:
        raise ShapeError(f"Max-pool grad shape {grad_out.shape} does not match output {argmax.shape}")
    n, c, out_h, out_w = grad_out.shape

    blocks = np.zeros((n, c, out_h, out_w, kernel * kernel))
    np.put_along_axis(blocks, argmax[..., np.newaxis], grad_out[..., np.newaxis], axis=-1)
    blocks = blocks.reshape(n, c, out_h, out_w, kernel, kernel).transpose(0, 1, 2, 4, 3, 5)
    grad_x = np.zeros(input_shape)
    grad_x[:, :, :out_h * kernel, :out_w * kernel] = blocks.reshape(n, c, out_h * kernel, out_w * kernel)
    return grad_x[0] if single else grad_x


def global_avg_pool_forward(x: np.ndarray) -> Tuple[np.ndarray, Any]:
    """Per-channel spatial mean: (N, C, H, W) -> (N, C)"""
    x, single = _as_batch(x, 4)
    out = x.mean(axis=(2, 3))
    return (out[0] if single else out), (x.shape, single)


def global_avg_pool_backward(grad_out: np.ndarray, cache) -> np.ndarray:
    input_shape, single = cache
    grad_out, _ = _as_batch(grad_out, 2)
    if grad_out.shape != input_shape[:2]:
        raise ShapeError(f"GAP grad shape {grad_out.shape} does not match {input_shape[:2]}")
    area = input_shape[2] * input_shape[3]
    grad_x = np.broadcast_to(grad_out[:, :, np.newaxis, np.newaxis] / area, input_shape).copy()
    return grad_x[0] if single else grad_x


def fully_connected_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> Tuple[np.ndarray, Any]:
    """(N, in) -> (N, out) with weights (out, in)"""
    x, single = _as_batch(x, 2)
    if weights.ndim != 2 or x.shape[1] != weights.shape[1]:
        raise ShapeError(f"FC input has {x.shape[1]} features, weights are {weights.shape}")
    if bias.shape != (weights.shape[0],):
        raise ShapeError(f"FC bias must have shape ({weights.shape[0]},), got {bias.shape}")
    out = x @ weights.T + bias
    return (out[0] if single else out), (x, weights, single)


def fully_connected_backward(grad_out: np.ndarray, cache) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, weights, single = cache
    grad_out, _ = _as_batch(grad_out, 2)
    if grad_out.shape != (x.shape[0], weights.shape[0]):
        raise ShapeError(f"FC grad shape {grad_out.shape} does not match output {(x.shape[0], weights.shape[0])}")
    grad_x = grad_out @ weights
    grad_w = grad_out.T @ x
    grad_b = grad_out.sum(axis=0)
    return (grad_x[0] if single else grad_x), grad_w, grad_b


def softmax(logits: np.ndarray) -> np.ndarray:
    """Max-subtracted softmax over the last axis"""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def one_hot(labels, num_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise DomainError(f"Labels must lie in 0..{num_classes - 1}")
    out = np.zeros((labels.shape[0], num_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def cce_loss(predictions: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Mean categorical cross-entropy (natural log) and its gradient with
    respect to the logits that produced `predictions` through softmax.
    """
    p = np.atleast_2d(np.asarray(predictions, dtype=np.float64))
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if p.shape != y.shape:
        raise ShapeError(f"Predictions {p.shape} and targets {y.shape} differ in shape")
    is_binary = np.all((y == 0.0) | (y == 1.0), axis=1)
    if not np.all(is_binary & (y.sum(axis=1) == 1.0)):
        bad = int(np.argmin(is_binary & (y.sum(axis=1) == 1.0)))
        raise DomainError(f"Target row {bad} is not one-hot", details={'row': bad})

    n = p.shape[0]
    true_prob = p[np.arange(n), np.argmax(y, axis=1)]
    loss = float(-np.mean(np.log(np.maximum(true_prob, np.finfo(np.float64).tiny))))
    grad = (p - y) / n
    return loss, grad
