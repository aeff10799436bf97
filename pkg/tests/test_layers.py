"""Layer-level behaviour: spec'd forward examples, pooling semantics, loss."""

import numpy as np
import pytest

from ovhar.errors import OvharError, ShapeError
from ovhar.nn.layers import MaxPool1d
from ovhar.nn.loss import mse_loss
from ovhar.nn.model import ModelConfig, RegressorModel
from ovhar.rng import SplitMix64


def test_zero_network_zero_output():
    model = RegressorModel(ModelConfig(seed=0), init=False)
    out = model.forward(np.zeros((250, 6)))
    assert out.shape == (768,)
    assert np.all(out == 0.0)


def test_default_shape_arithmetic():
    # [250, 6] -> conv 64 filters -> pool 2 -> LSTM input [125, 64] -> 768
    model = RegressorModel(ModelConfig(seed=42))
    out = model.forward(SplitMix64(1).normals(250 * 6).reshape(250, 6))
    assert out.shape == (768,)
    assert model.last_intermediates()["lstm_in"].shape == (1, 125, 64)


@pytest.mark.parametrize("length", [2, 33, 97, 250])
def test_output_length_independent_of_input_extent(length):
    model = RegressorModel(ModelConfig(in_channels=2, conv_filters=4, hidden_size=3, seed=1))
    out = model.forward(SplitMix64(length).normals(length * 2).reshape(length, 2))
    assert out.shape == (768,)
    assert np.all(np.isfinite(out))


def test_constant_window_propagates_conv_bias():
    # all-zero conv weights, bias b: pool of the constant is the constant
    model = RegressorModel(ModelConfig(in_channels=1, conv_filters=4, hidden_size=8, seed=3))
    model.conv.weight[...] = 0.0
    model.conv.bias[...] = 0.5
    model.forward(np.ones((250, 1)))
    lstm_in = model.last_intermediates()["lstm_in"]
    assert lstm_in.shape == (1, 125, 4)
    assert np.all(lstm_in == 0.5)


def test_channel_mismatch_is_structured_error():
    model = RegressorModel(ModelConfig(seed=0), init=False)
    with pytest.raises(ShapeError):
        model.forward(np.zeros((250, 4)))


def test_backward_without_forward_errors():
    model = RegressorModel(ModelConfig(seed=0), init=False)
    with pytest.raises(OvharError):
        model.backward(np.zeros(768))


def test_maxpool_tie_routes_to_earliest():
    pool = MaxPool1d(2)
    x = np.array([[[2.0], [2.0]]])  # one group, tied
    y, cache = pool.forward(x)
    assert y[0, 0, 0] == 2.0
    d_x = pool.backward(np.array([[[1.0]]]), cache)
    assert d_x[0, 0, 0] == 1.0 and d_x[0, 1, 0] == 0.0


def test_maxpool_gradient_is_partition():
    # scattering pooled gradients back preserves the upstream total per group
    pool = MaxPool1d(3)
    rng = SplitMix64(8)
    x = rng.normals(2 * 9 * 4).reshape(2, 9, 4)
    _, cache = pool.forward(x)
    d_out = rng.normals(2 * 3 * 4).reshape(2, 3, 4)
    d_x = pool.backward(d_out, cache)
    regrouped = d_x.reshape(2, 3, 3, 4).sum(axis=2)
    assert np.allclose(regrouped, d_out)


def test_maxpool_drops_trailing_remainder():
    pool = MaxPool1d(2)
    x = np.arange(10, dtype=float).reshape(1, 5, 2)
    y, cache = pool.forward(x)
    assert y.shape == (1, 2, 2)
    d_x = pool.backward(np.ones((1, 2, 2)), cache)
    assert np.all(d_x[0, 4] == 0.0)  # dropped tail row gets no gradient


def test_head_affine_in_weights():
    # with the LSTM output fixed, head output is affine in head weights
    model = RegressorModel(ModelConfig(in_channels=2, conv_filters=4, hidden_size=4, seed=9))
    window = SplitMix64(10).normals(60 * 2).reshape(60, 2)
    rng = SplitMix64(11)
    w1 = rng.normals(model.head.weight.size).reshape(model.head.weight.shape)
    w2 = rng.normals(model.head.weight.size).reshape(model.head.weight.shape)
    bias = model.head.bias.copy()

    def out_with(w):
        model.head.weight[...] = w
        return model.forward(window)

    alpha, beta = 0.3, -1.7
    lhs = out_with(alpha * w1 + beta * w2)
    rhs = alpha * (out_with(w1) - bias) + beta * (out_with(w2) - bias) + bias
    assert np.allclose(lhs, rhs, atol=1e-10)


class TestMseLoss:
    def test_equal_inputs_zero(self):
        v = SplitMix64(1).normals(768)
        loss, grad = mse_loss(v, v.copy())
        assert loss == 0.0
        assert np.all(grad == 0.0)

    def test_unit_difference(self):
        loss, _ = mse_loss(np.ones(768), np.zeros(768))
        assert loss == 1.0

    def test_single_spike(self):
        pred = np.zeros(768)
        pred[0] = 3.0
        loss, grad = mse_loss(pred, np.zeros(768))
        assert loss == 9.0 / 768  # 0.01171875 exactly
        assert grad[0] == 2.0 * 3.0 / 768

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            mse_loss(np.zeros(768), np.zeros(512))


def test_forward_deterministic():
    window = SplitMix64(2).normals(80 * 3).reshape(80, 3)
    cfg = ModelConfig(in_channels=3, conv_filters=8, hidden_size=8, seed=4)
    out1 = RegressorModel(cfg).forward(window)
    out2 = RegressorModel(cfg).forward(window)
    assert np.array_equal(out1, out2)


def test_batch_forward_matches_single():
    model = RegressorModel(ModelConfig(in_channels=3, conv_filters=8, hidden_size=8, seed=4))
    rng = SplitMix64(5)
    windows = rng.normals(3 * 50 * 3).reshape(3, 50, 3)
    batched = model.forward_batch(windows)
    for i in range(3):
        assert np.allclose(model.forward(windows[i]), batched[i], atol=1e-12)
