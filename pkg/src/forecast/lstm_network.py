"""
Stacked LSTM regressor
numpy forward pass and backpropagation through time for a stack of LSTM
layers followed by a dense hidden -> 1 head.

Gate rows of every layer weight matrix W (4H x (input + H)) are ordered
input, forget, output, candidate; the layer input is concatenated
[x_t, h_{t-1}].
"""

import os
import sys
from dataclasses import dataclass, asdict
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from utils.errors import ContractViolationError, NumericError


@dataclass(frozen=True)
class Hyperparams:
    """Training hyperparameters of the band-count predictor"""
    learning_rate: float = 1e-4
    epochs: int = 100
    hidden_size: int = 256
    num_layers: int = 6
    batch_size: int = 16
    window_k: int = 12
    seed: int = 0

    def __post_init__(self):
        for name in ('learning_rate', 'hidden_size', 'num_layers', 'batch_size', 'window_k'):
            if not getattr(self, name) > 0:
                raise ContractViolationError(f"{name} must be positive")
        if self.epochs < 0:
            raise ContractViolationError("epochs must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ContractViolationError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class LstmLayer:
    W: np.ndarray
    b: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.b.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.W.shape[1] - self.hidden_size


@dataclass
class LstmModel:
    """
    Stacked LSTM + dense head

    Inputs are band counts normalised as (n - norm_offset) / norm_scale.
    """
    layers: List[LstmLayer]
    head_w: np.ndarray
    head_b: np.ndarray
    n_bands: int
    norm_offset: float = 1.0
    norm_scale: float = 1.0
    hyperparams: Optional[Hyperparams] = None

    @property
    def hidden_size(self) -> int:
        return self.layers[0].hidden_size

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def window_k(self) -> int:
        return self.hyperparams.window_k if self.hyperparams else 1

    def parameters(self) -> List[np.ndarray]:
        """Parameter arrays in a fixed order: W0, b0, W1, b1, ..., head_w, head_b"""
        params = []
        for layer in self.layers:
            params.extend([layer.W, layer.b])
        params.extend([self.head_w, self.head_b])
        return params

    def copy(self) -> 'LstmModel':
        return LstmModel(
            layers=[LstmLayer(layer.W.copy(), layer.b.copy()) for layer in self.layers],
            head_w=self.head_w.copy(),
            head_b=self.head_b.copy(),
            n_bands=self.n_bands,
            norm_offset=self.norm_offset,
            norm_scale=self.norm_scale,
            hyperparams=self.hyperparams,
        )

    def normalize(self, counts) -> np.ndarray:
        return (np.asarray(counts, dtype=np.float64) - self.norm_offset) / self.norm_scale

    def denormalize(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.norm_scale + self.norm_offset


def normalization_for(n_bands: int) -> Tuple[float, float]:
    """n -> (n - 1) / (F - 1); a single-band cell keeps scale 1"""
    return 1.0, float(max(n_bands - 1, 1))


def init_model(hp: Hyperparams, n_bands: int) -> LstmModel:
    """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from a seeded generator"""
    rng = np.random.default_rng(hp.seed)
    layers = []
    input_size = 1
    for _ in range(hp.num_layers):
        fan_in = input_size + hp.hidden_size
        bound = 1.0 / np.sqrt(fan_in)
        W = rng.uniform(-bound, bound, size=(4 * hp.hidden_size, fan_in))
        b = rng.uniform(-bound, bound, size=4 * hp.hidden_size)
        layers.append(LstmLayer(W, b))
        input_size = hp.hidden_size
    bound = 1.0 / np.sqrt(hp.hidden_size)
    head_w = rng.uniform(-bound, bound, size=hp.hidden_size)
    head_b = rng.uniform(-bound, bound, size=1)
    offset, scale = normalization_for(n_bands)
    return LstmModel(layers, head_w, head_b, n_bands, offset, scale, hp)


def zero_model(hp: Hyperparams, n_bands: int) -> LstmModel:
    """Model with every weight and bias at zero"""
    model = init_model(hp, n_bands)
    for param in model.parameters():
        param[...] = 0.0
    return model


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def forward_batch(model: LstmModel, windows: np.ndarray) -> Tuple[np.ndarray, Dict[str, Any]]:
    """
    Forward pass over a batch of normalised windows

    Args:
        model: Network
        windows: (batch, k) normalised band counts

    Returns:
        (outputs of shape (batch,), cache for backward_batch)
    """
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 1:
        windows = windows[None, :]
    batch, steps = windows.shape
    sequence = windows[:, :, None]
    layer_caches = []

    for layer in model.layers:
        H = layer.hidden_size
        h = np.zeros((batch, H))
        c = np.zeros((batch, H))
        outputs = np.zeros((batch, steps, H))
        steps_cache = []
        for t in range(steps):
            z = np.concatenate([sequence[:, t, :], h], axis=1)
            a = z @ layer.W.T + layer.b
            i = _sigmoid(a[:, :H])
            f = _sigmoid(a[:, H:2 * H])
            o = _sigmoid(a[:, 2 * H:3 * H])
            g = np.tanh(a[:, 3 * H:])
            c_prev = c
            c = f * c_prev + i * g
            tanh_c = np.tanh(c)
            h = o * tanh_c
            outputs[:, t, :] = h
            steps_cache.append((z, i, f, o, g, c_prev, tanh_c))
        layer_caches.append(steps_cache)
        sequence = outputs

    last = sequence[:, -1, :]
    y = last @ model.head_w + model.head_b[0]
    if not np.all(np.isfinite(y)):
        raise NumericError("non-finite network output")
    return y, {'layers': layer_caches, 'last': last, 'steps': steps}


def forward(model: LstmModel, window) -> float:
    """Network output for a single normalised window"""
    window = np.asarray(window, dtype=np.float64).reshape(-1)
    if model.hyperparams and window.shape[0] != model.hyperparams.window_k:
        raise ContractViolationError(
            f"window has {window.shape[0]} values, model expects {model.hyperparams.window_k}"
        )
    y, _ = forward_batch(model, window[None, :])
    return float(y[0])


def backward_batch(model: LstmModel, cache: Dict[str, Any], dy: np.ndarray) -> List[np.ndarray]:
    """
    Gradients of a loss with respect to every parameter, given dL/dy

    Returns:
        Gradient arrays aligned with model.parameters()
    """
    dy = np.asarray(dy, dtype=np.float64).reshape(-1)
    last = cache['last']
    steps = cache['steps']
    batch = dy.shape[0]

    d_head_w = last.T @ dy
    d_head_b = np.array([dy.sum()])

    top = model.layers[-1]
    d_outputs = np.zeros((batch, steps, top.hidden_size))
    d_outputs[:, -1, :] = dy[:, None] * model.head_w[None, :]

    layer_grads = []
    for layer, steps_cache in zip(reversed(model.layers), reversed(cache['layers'])):
        H = layer.hidden_size
        n_in = layer.input_size
        dW = np.zeros_like(layer.W)
        db = np.zeros_like(layer.b)
        dh_next = np.zeros((batch, H))
        dc_next = np.zeros((batch, H))
        d_inputs = np.zeros((batch, steps, n_in))

        for t in reversed(range(steps)):
            z, i, f, o, g, c_prev, tanh_c = steps_cache[t]
            dh = d_outputs[:, t, :] + dh_next
            do = dh * tanh_c
            dc = dc_next + dh * o * (1.0 - tanh_c ** 2)
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            da = np.concatenate([
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                do * o * (1.0 - o),
                dg * (1.0 - g ** 2),
            ], axis=1)
            dW += da.T @ z
            db += da.sum(axis=0)
            dz = da @ layer.W
            d_inputs[:, t, :] = dz[:, :n_in]
            dh_next = dz[:, n_in:]

        layer_grads.append((dW, db))
        d_outputs = d_inputs

    grads = []
    for dW, db in reversed(layer_grads):
        grads.extend([dW, db])
    grads.extend([d_head_w, d_head_b])
    return grads


def squared_error_gradients(model: LstmModel, window, target: float) -> List[np.ndarray]:
    """Analytic gradient of (y - target)^2 for one sample"""
    y, cache = forward_batch(model, np.asarray(window, dtype=np.float64)[None, :])
    return backward_batch(model, cache, 2.0 * (y - target))
