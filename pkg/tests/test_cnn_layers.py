import numpy as np
import pytest

from services import cnn_layers as L
from utils.error_handlers import ShapeError, DomainError


def numeric_grad(f, x, step=1e-6):
    """Central differences of the scalar function f at every entry of x"""
    grad = np.zeros_like(x)
    flat, g = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + step
        plus = f()
        flat[i] = original - step
        minus = f()
        flat[i] = original
        g[i] = (plus - minus) / (2 * step)
    return grad


def relative_error(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-5)))


def brute_force_conv(x, w, b, stride, padding):
    n, c, h, width = x.shape
    o, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    out_h = (h + 2 * padding - k) // stride + 1
    out_w = (width + 2 * padding - k) // stride + 1
    out = np.zeros((n, o, out_h, out_w))
    for ni in range(n):
        for oi in range(o):
            for r in range(out_h):
                for s in range(out_w):
                    patch = xp[ni, :, r * stride:r * stride + k, s * stride:s * stride + k]
                    out[ni, oi, r, s] = np.sum(patch * w[oi]) + b[oi]
    return out


@pytest.mark.parametrize('stride,padding,kernel', [(1, 0, 3), (1, 1, 3), (2, 3, 7), (2, 1, 3)])
def test_conv_matches_brute_force(rng, stride, padding, kernel):
    x = rng.standard_normal((2, 3, 9, 10))
    w = rng.standard_normal((4, 3, kernel, kernel))
    b = rng.standard_normal(4)
    out, _ = L.conv2d_forward(x, w, b, stride, padding)
    np.testing.assert_allclose(out, brute_force_conv(x, w, b, stride, padding), atol=1e-10)


def test_conv_accepts_a_single_sample(rng):
    x = rng.standard_normal((3, 6, 6))
    w = rng.standard_normal((2, 3, 3, 3))
    out, _ = L.conv2d_forward(x, w, np.zeros(2), 1, 1)
    assert out.shape == (2, 6, 6)


def test_conv_shape_errors(rng):
    with pytest.raises(ShapeError):
        L.conv2d_forward(rng.standard_normal((1, 2, 5, 5)), rng.standard_normal((1, 3, 3, 3)), np.zeros(1))
    with pytest.raises(ShapeError):
        L.conv2d_forward(rng.standard_normal((1, 3, 2, 2)), rng.standard_normal((1, 3, 5, 5)), np.zeros(1))


@pytest.mark.parametrize('stride,padding', [(1, 1), (2, 1), (2, 3)])
def test_conv_gradients(rng, stride, padding):
    x = rng.standard_normal((2, 2, 7, 7))
    w = rng.standard_normal((3, 2, 3, 3))
    b = rng.standard_normal(3)
    out, cache = L.conv2d_forward(x, w, b, stride, padding)
    upstream = rng.standard_normal(out.shape)
    grad_x, grad_w, grad_b = L.conv2d_backward(upstream, cache)

    loss = lambda: float(np.sum(L.conv2d_forward(x, w, b, stride, padding)[0] * upstream))
    assert relative_error(grad_x, numeric_grad(loss, x)) < 1e-4
    assert relative_error(grad_w, numeric_grad(loss, w)) < 1e-4
    assert relative_error(grad_b, numeric_grad(loss, b)) < 1e-4


def test_relu_gradient(rng):
    x = rng.standard_normal((2, 3, 4, 4))
    out, mask = L.relu_forward(x)
    assert np.all(out >= 0)
    upstream = rng.standard_normal(x.shape)
    np.testing.assert_array_equal(L.relu_backward(upstream, mask), np.where(x > 0, upstream, 0.0))


def test_maxpool_ties_go_to_first_element():
    x = np.ones((1, 1, 2, 2))
    out, cache = L.maxpool_forward(x)
    assert out.shape == (1, 1, 1, 1)
    grad = L.maxpool_backward(np.ones((1, 1, 1, 1)), cache)
    np.testing.assert_array_equal(grad[0, 0], [[1.0, 0.0], [0.0, 0.0]])


def test_maxpool_crops_odd_edges(rng):
    x = rng.standard_normal((1, 2, 5, 7))
    out, cache = L.maxpool_forward(x)
    assert out.shape == (1, 2, 2, 3)
    np.testing.assert_allclose(out[0, 1, 1, 2], x[0, 1, 2:4, 4:6].max())
    grad = L.maxpool_backward(np.ones(out.shape), cache)
    assert np.all(grad[:, :, 4, :] == 0) and np.all(grad[:, :, :, 6] == 0)


def test_maxpool_gradient(rng):
    x = rng.standard_normal((2, 2, 6, 6))
    out, cache = L.maxpool_forward(x)
    upstream = rng.standard_normal(out.shape)
    loss = lambda: float(np.sum(L.maxpool_forward(x)[0] * upstream))
    assert relative_error(L.maxpool_backward(upstream, cache), numeric_grad(loss, x)) < 1e-4


def test_maxpool_rejects_overlapping_windows(rng):
    with pytest.raises(ShapeError):
        L.maxpool_forward(rng.standard_normal((1, 1, 4, 4)), kernel=3, stride=2)


def test_global_avg_pool_gradient(rng):
    x = rng.standard_normal((2, 3, 4, 5))
    out, cache = L.global_avg_pool_forward(x)
    np.testing.assert_allclose(out, x.mean(axis=(2, 3)))
    upstream = rng.standard_normal(out.shape)
    loss = lambda: float(np.sum(L.global_avg_pool_forward(x)[0] * upstream))
    assert relative_error(L.global_avg_pool_backward(upstream, cache), numeric_grad(loss, x)) < 1e-4


def test_fully_connected_gradients(rng):
    x = rng.standard_normal((4, 6))
    w = rng.standard_normal((3, 6))
    b = rng.standard_normal(3)
    out, cache = L.fully_connected_forward(x, w, b)
    np.testing.assert_allclose(out, x @ w.T + b)
    upstream = rng.standard_normal(out.shape)
    grad_x, grad_w, grad_b = L.fully_connected_backward(upstream, cache)
    loss = lambda: float(np.sum(L.fully_connected_forward(x, w, b)[0] * upstream))
    assert relative_error(grad_x, numeric_grad(loss, x)) < 1e-4
    assert relative_error(grad_w, numeric_grad(loss, w)) < 1e-4
    assert relative_error(grad_b, numeric_grad(loss, b)) < 1e-4


def test_softmax_is_stable_and_normalized():
    probs = L.softmax(np.array([[1000.0, 1000.0, -1000.0], [0.0, 0.0, 0.0]]))
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)
    np.testing.assert_allclose(probs[0], [0.5, 0.5, 0.0])


def test_softmax_cross_entropy_gradient(rng):
    logits = rng.standard_normal((3, 5))
    targets = L.one_hot([0, 4, 2], 5)
    _, grad = L.cce_loss(L.softmax(logits), targets)
    loss = lambda: L.cce_loss(L.softmax(logits), targets)[0]
    assert relative_error(grad, numeric_grad(loss, logits, step=1e-5)) < 1e-6


def test_uniform_prediction_loss_is_log_classes():
    loss, _ = L.cce_loss(np.full((2, 5), 0.2), L.one_hot([1, 3], 5))
    assert loss == pytest.approx(np.log(5.0))


def test_cce_rejects_non_one_hot_targets():
    with pytest.raises(DomainError):
        L.cce_loss(np.full((1, 3), 1 / 3), np.array([[0.5, 0.5, 0.0]]))
    with pytest.raises(DomainError):
        L.one_hot([5], 5)
