import numpy as np
import pytest

from models.cnn_models import LayerSpec, CONV, FULLY_CONNECTED
from models.feature_models import FeatureImage
from services.cnn_layers import one_hot
from services.cnn_model import (
    build_reference_model, reference_layers, infer_shapes, count_parameters, model_footprint,
    forward, predict, predict_batch, gradient_check, loss_and_gradients, init_parameters
)
from utils.error_handlers import ShapeError, ConfigError


def test_reference_parameter_count():
    assert count_parameters(reference_layers()) == 1_607_749


def test_parameter_count_does_not_depend_on_input_size():
    assert count_parameters(build_reference_model((32, 32, 3))) == 1_607_749


def test_footprint_accounting():
    footprint = model_footprint(reference_layers())
    assert footprint['bytes_float32'] == 1_607_749 * 4
    assert footprint['training_bytes_float32'] == 1_607_749 * 12
    assert footprint['training_megabytes_float32'] == pytest.approx(19.29, abs=0.01)


def test_reference_shapes_at_224():
    shapes = infer_shapes(reference_layers(), (3, 224, 224))
    assert shapes[0] == (32, 112, 112)
    assert shapes[2] == (32, 56, 56)
    assert shapes[13] == (512, 7, 7)
    assert shapes[-1] == (5,)


def test_too_small_input_is_rejected():
    with pytest.raises(ShapeError):
        build_reference_model((16, 16, 3))


def test_layer_list_mismatch_is_a_shape_error():
    layers = [LayerSpec(CONV, 3, 4, kernel_size=3), LayerSpec(FULLY_CONNECTED, 7, 2)]
    with pytest.raises(ShapeError):
        infer_shapes(layers, (3, 8, 8))


def test_unknown_layer_kind():
    with pytest.raises(ConfigError):
        LayerSpec('attention').validate()


def test_init_is_seeded_and_bounded():
    layers = reference_layers()
    a, b = init_parameters(layers, 7), init_parameters(layers, 7)
    for pa, pb, layer in zip(a, b, layers):
        for name in pa:
            np.testing.assert_array_equal(pa[name], pb[name])
        if 'weight' in pa:
            fan_in = int(np.prod(pa['weight'].shape[1:]))
            assert np.abs(pa['weight']).max() <= 1 / np.sqrt(fan_in)
            np.testing.assert_array_equal(pa['bias'], 0.0)


def test_initial_loss_is_near_log_classes(rng):
    model = build_reference_model((64, 64, 3), seed=0)
    x = rng.random((8, 3, 64, 64))
    loss, _, probs = loss_and_gradients(model, x, one_hot(np.arange(8) % 5, 5))
    assert loss == pytest.approx(np.log(5.0), abs=0.05)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)


def test_forward_rejects_wrong_input_shape(tiny_model, rng):
    with pytest.raises(ShapeError):
        forward(tiny_model, rng.random((1, 3, 9, 9)))


def test_predict_matches_batch(tiny_model, rng):
    images = rng.random((5, 3, 8, 8))
    batch = predict_batch(tiny_model, images, batch_size=2)
    for i in range(5):
        np.testing.assert_allclose(predict(tiny_model, images[i]), batch[i], atol=1e-12)


def test_predict_accepts_feature_images(tiny_model, rng):
    pixels = rng.random((8, 8, 3))
    probs = predict(tiny_model, FeatureImage(pixels=pixels))
    np.testing.assert_allclose(probs, predict(tiny_model, pixels.transpose(2, 0, 1)))
    assert probs.shape == (5,)


def test_copy_is_independent(tiny_model):
    clone = tiny_model.copy()
    clone.parameters[0]['weight'][:] = 0.0
    assert np.any(tiny_model.parameters[0]['weight'] != 0.0)


def test_tiny_model_gradient_check(tiny_model, rng):
    x = rng.random((3, 3, 8, 8))
    targets = one_hot([0, 2, 4], 5)
    assert gradient_check(tiny_model, x, targets, fraction=1.0, max_checks=500) < 1e-4


def test_reference_model_gradient_check(rng):
    model = build_reference_model((32, 32, 3), seed=1)
    x = rng.random((2, 3, 32, 32))
    targets = one_hot([1, 3], 5)
    assert gradient_check(model, x, targets, max_checks=60, seed=2) < 1e-4
