"""
Rotascan - Network Layers
Numpy 1-D convolution, max pooling, ReLU, batch normalisation, flatten and dense
layers with explicit forward/backward passes
"""

from typing import Dict, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    """
    LAYER CONTRACT
    - forward(x, training) caches what backward needs
    - backward(dout) fills self.grads and returns the input gradient
    - params/grads share keys; buffers hold non-trained state
    """

    def __init__(self):
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.buffers: Dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dout: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def arrays(self) -> Dict[str, np.ndarray]:
        """Every persisted array: trained parameters then buffers"""
        return {**self.params, **self.buffers}

    def load_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        for name in self.params:
            self.params[name] = np.array(arrays[name], dtype=np.float64)
        for name in self.buffers:
            self.buffers[name] = np.array(arrays[name], dtype=np.float64)


class Conv1d(Layer):
    """(B, C_in, L) -> (B, C_out, L), zero 'same' padding, odd kernel"""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, rng: np.random.Generator):
        super().__init__()
        self.kernel_size = kernel_size
        self.pad = kernel_size // 2
        fan_in = in_channels * kernel_size
        self.params["weight"] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(out_channels, in_channels, kernel_size))
        self.params["bias"] = np.zeros(out_channels)
        self._cols: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        padded = np.pad(x, ((0, 0), (0, 0), (self.pad, self.pad)))
        cols = sliding_window_view(padded, self.kernel_size, axis=2)
        self._cols = cols
        out = np.einsum("bclk,ock->bol", cols, self.params["weight"], optimize=True)
        return out + self.params["bias"][None, :, None]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        cols = self._cols
        self.grads["weight"] = np.einsum("bol,bclk->ock", dout, cols, optimize=True)
        self.grads["bias"] = dout.sum(axis=(0, 2))
        dcols = np.einsum("bol,ock->bclk", dout, self.params["weight"], optimize=True)
        batch, channels, length, _ = dcols.shape
        dpadded = np.zeros((batch, channels, length + 2 * self.pad))
        for k in range(self.kernel_size):
            dpadded[:, :, k:k + length] += dcols[:, :, :, k]
        return dpadded[:, :, self.pad:self.pad + length]


class MaxPool1d(Layer):
    """Non-overlapping windows of `stride`; a trailing partial window is dropped"""

    def __init__(self, stride: int):
        super().__init__()
        self.stride = stride
        self._shape = None
        self._argmax: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        batch, channels, length = x.shape
        out_len = length // self.stride
        windows = x[:, :, :out_len * self.stride].reshape(batch, channels, out_len, self.stride)
        argmax = windows.argmax(axis=3)
        self._shape = x.shape
        self._argmax = argmax
        return np.take_along_axis(windows, argmax[..., None], axis=3)[..., 0]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        batch, channels, length = self._shape
        out_len = dout.shape[2]
        dwindows = np.zeros((batch, channels, out_len, self.stride))
        np.put_along_axis(dwindows, self._argmax[..., None], dout[..., None], axis=3)
        dx = np.zeros(self._shape)
        dx[:, :, :out_len * self.stride] = dwindows.reshape(batch, channels, out_len * self.stride)
        return dx


class ReLU(Layer):
    def __init__(self):
        super().__init__()
        self._mask: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        mask = x > 0
        self._mask = mask
        return np.where(mask, x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dout, 0.0)


class BatchNorm1d(Layer):
    """
    Per-channel normalisation of (B, C, L) or (B, C) inputs.
    Training uses batch statistics and updates running = momentum * running + (1 - momentum) * batch;
    inference uses the frozen running statistics.
    """

    def __init__(self, channels: int, epsilon: float = 1e-5, momentum: float = 0.9):
        super().__init__()
        self.epsilon = epsilon
        self.momentum = momentum
        self.params["gamma"] = np.ones(channels)
        self.params["beta"] = np.zeros(channels)
        self.buffers["running_mean"] = np.zeros(channels)
        self.buffers["running_var"] = np.ones(channels)
        self._cache = None

    @staticmethod
    def _axes(x: np.ndarray):
        return (0, 2) if x.ndim == 3 else (0,)

    @staticmethod
    def _expand(v: np.ndarray, ndim: int) -> np.ndarray:
        return v[None, :, None] if ndim == 3 else v[None, :]

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        axes = self._axes(x)
        if training:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.buffers["running_mean"] = self.momentum * self.buffers["running_mean"] + (1 - self.momentum) * mean
            self.buffers["running_var"] = self.momentum * self.buffers["running_var"] + (1 - self.momentum) * var
        else:
            mean = self.buffers["running_mean"]
            var = self.buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        x_hat = (x - self._expand(mean, x.ndim)) * self._expand(inv_std, x.ndim)
        self._cache = (x_hat, inv_std, axes)
        return self._expand(self.params["gamma"], x.ndim) * x_hat + self._expand(self.params["beta"], x.ndim)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x_hat, inv_std, axes = self._cache
        ndim = dout.ndim
        count = dout.size // dout.shape[1]
        self.grads["gamma"] = (dout * x_hat).sum(axis=axes)
        self.grads["beta"] = dout.sum(axis=axes)
        dx_hat = dout * self._expand(self.params["gamma"], ndim)
        sum_dx_hat = self._expand(dx_hat.sum(axis=axes), ndim)
        sum_dx_hat_x = self._expand((dx_hat * x_hat).sum(axis=axes), ndim)
        return self._expand(inv_std, ndim) / count * (count * dx_hat - sum_dx_hat - x_hat * sum_dx_hat_x)


class Flatten(Layer):
    def __init__(self):
        super().__init__()
        self._shape = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout.reshape(self._shape)


class Dense(Layer):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.params["weight"] = rng.normal(0.0, np.sqrt(2.0 / in_features), size=(in_features, out_features))
        self.params["bias"] = np.zeros(out_features)
        self._x: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._x = x
        return x @ self.params["weight"] + self.params["bias"]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        self.grads["weight"] = self._x.T @ dout
        self.grads["bias"] = dout.sum(axis=0)
        return dout @ self.params["weight"].T


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy and its gradient with respect to the logits"""
    probs = softmax(logits)
    batch = logits.shape[0]
    loss = -np.log(np.clip(probs[np.arange(batch), targets], 1e-300, None)).mean()
    grad = probs.copy()
    grad[np.arange(batch), targets] -= 1.0
    return float(loss), grad / batch
