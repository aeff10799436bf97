"""The window-to-embedding regressor: Conv1d -> ReLU -> MaxPool -> BiLSTM -> Dense.

The pooled feature sequence keeps its time axis on the way into the LSTM (a
literal flatten would destroy the sequence the recurrence needs). The dense
head maps the concatenated final hidden states of both directions to the
768-dimensional prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ovhar.errors import OvharError, ShapeError
from ovhar.nn.layers import BiLstm, Conv1dSame, Dense, MaxPool1d, relu_backward, relu_forward
from ovhar.rng import SplitMix64, derive_seed

EMBEDDING_DIM = 768


@dataclass
class ModelConfig:
    in_channels: int = 6
    conv_filters: int = 64
    kernel_size: int = 5
    pool_size: int = 2
    hidden_size: int = 128
    embedding_dim: int = EMBEDDING_DIM
    seed: int = 0

    def validate(self) -> None:
        for name in ("in_channels", "conv_filters", "kernel_size", "pool_size", "hidden_size", "embedding_dim"):
            if getattr(self, name) < 1:
                raise OvharError(f"model config: {name} must be positive")


class RegressorModel:
    """Holds parameters and the cached intermediates of the last forward pass.

    One instance is single-threaded: ``backward`` consumes the cache left by
    the preceding ``forward`` / ``forward_batch`` call.
    """

    def __init__(self, config: ModelConfig | None = None, init: bool = True):
        self.config = config or ModelConfig()
        self.config.validate()
        cfg = self.config
        self.conv = Conv1dSame(cfg.in_channels, cfg.conv_filters, cfg.kernel_size)
        self.pool = MaxPool1d(cfg.pool_size)
        self.lstm = BiLstm(cfg.conv_filters, cfg.hidden_size)
        self.head = Dense(2 * cfg.hidden_size, cfg.embedding_dim)
        self._cache = None
        if init:
            rng = SplitMix64(derive_seed(cfg.seed, "model-init"))
            self.conv.init_params(rng)
            self.lstm.init_params(rng)
            self.head.init_params(rng)

    def parameters(self) -> dict[str, np.ndarray]:
        """Live views of every parameter tensor, keyed by stable names."""
        return {
            "conv.weight": self.conv.weight,
            "conv.bias": self.conv.bias,
            "lstm.fw.w_input": self.lstm.fw.w_input,
            "lstm.fw.w_hidden": self.lstm.fw.w_hidden,
            "lstm.fw.bias": self.lstm.fw.bias,
            "lstm.bw.w_input": self.lstm.bw.w_input,
            "lstm.bw.w_hidden": self.lstm.bw.w_hidden,
            "lstm.bw.bias": self.lstm.bw.bias,
            "head.weight": self.head.weight,
            "head.bias": self.head.bias,
        }

    def set_parameters(self, values: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        if set(values) != set(params):
            raise ShapeError("parameter set mismatch", expected=sorted(params), actual=sorted(values))
        for name, arr in values.items():
            if arr.shape != params[name].shape:
                raise ShapeError(f"parameter {name}", expected=params[name].shape, actual=arr.shape)
            params[name][...] = arr

    def forward_batch(self, windows: np.ndarray) -> np.ndarray:
        """windows: [B, T, C] -> predictions [B, embedding_dim]."""
        if windows.ndim != 3:
            raise ShapeError("model input", expected="[B, T, C]", actual=list(windows.shape))
        conv_out, conv_cache = self.conv.forward(windows)
        act, relu_mask = relu_forward(conv_out)
        pooled, pool_cache = self.pool.forward(act)
        h_cat, lstm_cache = self.lstm.forward(pooled)
        pred, head_cache = self.head.forward(h_cat)
        self._cache = {
            "conv": conv_cache,
            "relu": relu_mask,
            "pool": pool_cache,
            "lstm": lstm_cache,
            "head": head_cache,
            "lstm_in": pooled,
            "batch": windows.shape[0],
        }
        return pred

    def forward(self, window: np.ndarray) -> np.ndarray:
        """Single window [T, C] -> prediction vector [embedding_dim]."""
        if window.ndim != 2:
            raise ShapeError("window", expected="[T, C]", actual=list(window.shape))
        return self.forward_batch(window[None, :, :])[0]

    def backward_batch(self, upstream: np.ndarray) -> dict[str, np.ndarray]:
        """upstream: [B, embedding_dim] gradients of the loss w.r.t. predictions.

        Returns gradients summed over the batch, shape-matching parameters().
        """
        if self._cache is None:
            raise OvharError("backward called without a cached forward pass")
        if upstream.ndim != 2 or upstream.shape[0] != self._cache["batch"]:
            raise ShapeError(
                "upstream gradient",
                expected=f"[{self._cache['batch']}, {self.config.embedding_dim}]",
                actual=list(upstream.shape),
            )
        d_hcat, d_head_w, d_head_b = self.head.backward(upstream, self._cache["head"])
        d_pooled, grads_f, grads_b = self.lstm.backward(d_hcat, self._cache["lstm"])
        d_act = self.pool.backward(d_pooled, self._cache["pool"])
        d_conv_out = relu_backward(d_act, self._cache["relu"])
        _, d_conv_w, d_conv_b = self.conv.backward(d_conv_out, self._cache["conv"])
        return {
            "conv.weight": d_conv_w,
            "conv.bias": d_conv_b,
            "lstm.fw.w_input": grads_f["w_input"],
            "lstm.fw.w_hidden": grads_f["w_hidden"],
            "lstm.fw.bias": grads_f["bias"],
            "lstm.bw.w_input": grads_b["w_input"],
            "lstm.bw.w_hidden": grads_b["w_hidden"],
            "lstm.bw.bias": grads_b["bias"],
            "head.weight": d_head_w,
            "head.bias": d_head_b,
        }

    def backward(self, upstream: np.ndarray) -> dict[str, np.ndarray]:
        """Gradient pass for a single-window forward."""
        if upstream.ndim != 1:
            raise ShapeError("upstream gradient", expected="[embedding_dim]", actual=list(upstream.shape))
        return self.backward_batch(upstream[None, :])

    def last_intermediates(self) -> dict[str, np.ndarray]:
        """Diagnostic view of the cached forward pass (e.g. the LSTM input)."""
        if self._cache is None:
            raise OvharError("no forward pass has been run")
        return {"lstm_in": self._cache["lstm_in"]}
