"""Network layers with exact forward/backward passes.

All arrays are float64. Layers operate on batches with a leading batch axis:
inputs are [B, T, C] sequences, hidden states [B, H]. Each ``forward`` returns
``(output, cache)``; the matching ``backward`` consumes the cache and returns
input gradients plus parameter gradients.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit as sigmoid

from ovhar.errors import ShapeError
from ovhar.rng import SplitMix64


def glorot_uniform(rng: SplitMix64, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    n = int(np.prod(shape))
    return rng.uniforms(n, -limit, limit).reshape(shape)


class Conv1dSame:
    """1D convolution over time with zero "same" padding.

    weight[f, c, j] multiplies input channel c at kernel offset j for output
    filter f; output length equals input length.
    """

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.weight = np.zeros((out_channels, in_channels, kernel_size))
        self.bias = np.zeros(out_channels)

    def init_params(self, rng: SplitMix64) -> None:
        fan_in = self.in_channels * self.kernel_size
        fan_out = self.out_channels * self.kernel_size
        self.weight = glorot_uniform(rng, self.weight.shape, fan_in, fan_out)
        self.bias = np.zeros(self.out_channels)

    def forward(self, x: np.ndarray):
        if x.ndim != 3 or x.shape[2] != self.in_channels:
            raise ShapeError(
                "conv input", expected=f"[B, T, {self.in_channels}]", actual=list(x.shape)
            )
        batch, length, _ = x.shape
        k = self.kernel_size
        pad_left = (k - 1) // 2
        pad_right = k - 1 - pad_left
        x_pad = np.pad(x, ((0, 0), (pad_left, pad_right), (0, 0)))
        # patches[b, t, j, c] = x_pad[b, t + j, c]
        patches = np.stack([x_pad[:, j : j + length, :] for j in range(k)], axis=2)
        w_mat = self.weight.transpose(0, 2, 1).reshape(self.out_channels, -1)
        y = patches.reshape(batch, length, -1) @ w_mat.T + self.bias
        return y, (patches, x.shape, pad_left)

    def backward(self, d_out: np.ndarray, cache):
        patches, x_shape, pad_left = cache
        batch, length, _ = x_shape
        k = self.kernel_size
        d_bias = d_out.sum(axis=(0, 1))
        # [F, k, C] then back to the [F, C, k] parameter layout
        d_w = np.tensordot(d_out, patches, axes=([0, 1], [0, 1])).transpose(0, 2, 1)
        w_mat = self.weight.transpose(0, 2, 1).reshape(self.out_channels, -1)
        d_patches = (d_out @ w_mat).reshape(batch, length, k, self.in_channels)
        d_x_pad = np.zeros((batch, length + k - 1, self.in_channels))
        for j in range(k):
            d_x_pad[:, j : j + length, :] += d_patches[:, :, j, :]
        d_x = d_x_pad[:, pad_left : pad_left + length, :]
        return d_x, d_w, d_bias


def relu_forward(x: np.ndarray):
    mask = x > 0.0
    return x * mask, mask


def relu_backward(d_out: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return d_out * mask


class MaxPool1d:
    """Non-overlapping max pooling over time; trailing remainder rows are dropped.

    Backward routes each pooled gradient to the argmax of its group; ties go
    to the earliest index (np.argmax picks the first maximum).
    """

    def __init__(self, pool_size: int):
        self.pool_size = pool_size

    def forward(self, x: np.ndarray):
        batch, length, channels = x.shape
        p = self.pool_size
        if length < p:
            raise ShapeError("pool input shorter than pool size", expected=f"T >= {p}", actual=length)
        out_len = length // p
        grouped = x[:, : out_len * p, :].reshape(batch, out_len, p, channels)
        y = grouped.max(axis=2)
        argmax = grouped.argmax(axis=2)
        return y, (argmax, x.shape)

    def backward(self, d_out: np.ndarray, cache):
        argmax, x_shape = cache
        batch, length, channels = x_shape
        p = self.pool_size
        out_len = length // p
        d_grouped = np.zeros((batch, out_len, p, channels))
        np.put_along_axis(d_grouped, argmax[:, :, None, :], d_out[:, :, None, :], axis=2)
        d_x = np.zeros(x_shape)
        d_x[:, : out_len * p, :] = d_grouped.reshape(batch, out_len * p, channels)
        return d_x


class LstmDirection:
    """One LSTM direction: gates packed (input, forget, cell, output) along 4H."""

    def __init__(self, input_size: int, hidden_size: int):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.w_input = np.zeros((4 * hidden_size, input_size))
        self.w_hidden = np.zeros((4 * hidden_size, hidden_size))
        self.bias = np.zeros(4 * hidden_size)

    def init_params(self, rng: SplitMix64) -> None:
        h = self.hidden_size
        self.w_input = glorot_uniform(
            rng, self.w_input.shape, self.input_size, 4 * h
        )
        self.w_hidden = glorot_uniform(rng, self.w_hidden.shape, h, 4 * h)
        self.bias = np.zeros(4 * h)
        self.bias[h : 2 * h] = 1.0  # forget gate starts open

    def forward(self, xs: np.ndarray):
        batch, length, _ = xs.shape
        h = self.hidden_size
        xproj = xs @ self.w_input.T  # [B, T, 4H]
        h_t = np.zeros((batch, h))
        c_t = np.zeros((batch, h))
        gates_i = np.empty((length, batch, h))
        gates_f = np.empty((length, batch, h))
        gates_g = np.empty((length, batch, h))
        gates_o = np.empty((length, batch, h))
        cells = np.empty((length, batch, h))
        tanh_cells = np.empty((length, batch, h))
        hs_prev = np.empty((length, batch, h))
        cs_prev = np.empty((length, batch, h))
        for t in range(length):
            pre = xproj[:, t, :] + h_t @ self.w_hidden.T + self.bias
            i_t = sigmoid(pre[:, 0 * h : 1 * h])
            f_t = sigmoid(pre[:, 1 * h : 2 * h])
            g_t = np.tanh(pre[:, 2 * h : 3 * h])
            o_t = sigmoid(pre[:, 3 * h : 4 * h])
            hs_prev[t] = h_t
            cs_prev[t] = c_t
            c_t = f_t * c_t + i_t * g_t
            tc = np.tanh(c_t)
            h_t = o_t * tc
            gates_i[t], gates_f[t], gates_g[t], gates_o[t] = i_t, f_t, g_t, o_t
            cells[t] = c_t
            tanh_cells[t] = tc
        cache = (xs, gates_i, gates_f, gates_g, gates_o, tanh_cells, hs_prev, cs_prev)
        return h_t, cache

    def backward(self, d_h_last: np.ndarray, cache):
        xs, gates_i, gates_f, gates_g, gates_o, tanh_cells, hs_prev, cs_prev = cache
        batch, length, _ = xs.shape
        h = self.hidden_size
        d_h = d_h_last.copy()
        d_c = np.zeros_like(d_h)
        d_xproj = np.empty((batch, length, 4 * h))
        d_w_hidden = np.zeros_like(self.w_hidden)
        d_bias = np.zeros_like(self.bias)
        for t in range(length - 1, -1, -1):
            i_t, f_t, g_t, o_t = gates_i[t], gates_f[t], gates_g[t], gates_o[t]
            tc = tanh_cells[t]
            d_o = d_h * tc
            d_c = d_c + d_h * o_t * (1.0 - tc * tc)
            d_i = d_c * g_t
            d_f = d_c * cs_prev[t]
            d_g = d_c * i_t
            d_pre = np.concatenate(
                [
                    d_i * i_t * (1.0 - i_t),
                    d_f * f_t * (1.0 - f_t),
                    d_g * (1.0 - g_t * g_t),
                    d_o * o_t * (1.0 - o_t),
                ],
                axis=1,
            )
            d_w_hidden += d_pre.T @ hs_prev[t]
            d_bias += d_pre.sum(axis=0)
            d_xproj[:, t, :] = d_pre
            d_h = d_pre @ self.w_hidden
            d_c = d_c * f_t
        d_w_input = np.tensordot(d_xproj, xs, axes=([0, 1], [0, 1]))
        d_xs = d_xproj @ self.w_input
        grads = {"w_input": d_w_input, "w_hidden": d_w_hidden, "bias": d_bias}
        return d_xs, grads


class BiLstm:
    """Bidirectional LSTM read out as the concatenated final hidden states."""

    def __init__(self, input_size: int, hidden_size: int):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.fw = LstmDirection(input_size, hidden_size)
        self.bw = LstmDirection(input_size, hidden_size)

    def init_params(self, rng: SplitMix64) -> None:
        self.fw.init_params(rng)
        self.bw.init_params(rng)

    def forward(self, xs: np.ndarray):
        h_f, cache_f = self.fw.forward(xs)
        h_b, cache_b = self.bw.forward(xs[:, ::-1, :])
        return np.concatenate([h_f, h_b], axis=1), (cache_f, cache_b)

    def backward(self, d_out: np.ndarray, cache):
        cache_f, cache_b = cache
        h = self.hidden_size
        d_xs_f, grads_f = self.fw.backward(d_out[:, :h], cache_f)
        d_xs_b_rev, grads_b = self.bw.backward(d_out[:, h:], cache_b)
        d_xs = d_xs_f + d_xs_b_rev[:, ::-1, :]
        return d_xs, grads_f, grads_b


class Dense:
    """Fully connected layer, identity activation."""

    def __init__(self, in_features: int, out_features: int):
        self.in_features = in_features
        self.out_features = out_features
        self.weight = np.zeros((out_features, in_features))
        self.bias = np.zeros(out_features)

    def init_params(self, rng: SplitMix64) -> None:
        self.weight = glorot_uniform(
            rng, self.weight.shape, self.in_features, self.out_features
        )
        self.bias = np.zeros(self.out_features)

    def forward(self, x: np.ndarray):
        return x @ self.weight.T + self.bias, x

    def backward(self, d_out: np.ndarray, cache):
        x = cache
        d_w = d_out.T @ x
        d_b = d_out.sum(axis=0)
        d_x = d_out @ self.weight
        return d_x, d_w, d_b
