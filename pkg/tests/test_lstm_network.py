"""
Test the numpy LSTM forward pass, BPTT gradients and the Adam optimizer
"""

import sys
import os

import numpy as np
import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from forecast.adam_optimizer import Adam
from forecast.lstm_network import (
    Hyperparams, LstmLayer, LstmModel, forward, forward_batch, init_model,
    squared_error_gradients, zero_model,
)
from forecast.lstm_trainer import gradient_check
from utils.errors import ContractViolationError, NumericError


def small_hp(seed=0, hidden=8, layers=3, k=4):
    return Hyperparams(learning_rate=0.01, epochs=1, hidden_size=hidden, num_layers=layers,
                       batch_size=4, window_k=k, seed=seed)


def test_zero_model_outputs_zero():
    model = zero_model(small_hp(), n_bands=4)
    for window in ([0.0, 0.0, 0.0, 0.0], [1.0, 0.3, 0.7, 0.1]):
        assert forward(model, window) == 0.0


def test_saturated_forget_gate_accumulates_cell_state():
    """Test a hand-built single unit: gates open, candidate tanh(x), cell state summing"""
    W = np.zeros((4, 2))
    W[3, 0] = 1.0
    b = np.array([20.0, 20.0, 20.0, 0.0])
    model = LstmModel(layers=[LstmLayer(W, b)], head_w=np.array([1.0]), head_b=np.array([0.0]),
                      n_bands=4, hyperparams=Hyperparams(hidden_size=1, num_layers=1, window_k=2))
    expected = np.tanh(2.0 * np.tanh(0.5))
    assert forward(model, [0.5, 0.5]) == pytest.approx(expected, abs=1e-6)


def test_forward_is_deterministic():
    model = init_model(small_hp(seed=3), n_bands=4)
    window = [0.1, 0.5, 0.9, 0.2]
    assert forward(model, window) == forward(model, window)
    assert init_model(small_hp(seed=3), 4).head_w.tolist() == model.head_w.tolist()


def test_batch_matches_single_windows():
    model = init_model(small_hp(seed=5), n_bands=4)
    rng = np.random.default_rng(0)
    windows = rng.random((6, 4))
    batch, _ = forward_batch(model, windows)
    for row, value in zip(windows, batch):
        assert forward(model, row) == pytest.approx(value, abs=1e-12)


def test_forward_rejects_wrong_window_length():
    model = init_model(small_hp(), n_bands=4)
    with pytest.raises(ContractViolationError):
        forward(model, [0.0, 0.0])


def test_non_finite_output_raises():
    model = zero_model(small_hp(layers=1), n_bands=4)
    model.head_b[0] = np.inf
    with pytest.raises(NumericError):
        forward(model, [0.0] * 4)


def test_init_respects_fan_in_bound():
    hp = small_hp(hidden=8, layers=2)
    model = init_model(hp, n_bands=4)
    assert model.layers[0].W.shape == (32, 9)
    assert model.layers[1].W.shape == (32, 16)
    assert np.abs(model.layers[0].W).max() <= 1.0 / np.sqrt(9)
    assert np.abs(model.layers[1].W).max() <= 1.0 / np.sqrt(16)
    assert model.norm_offset == 1.0 and model.norm_scale == 3.0


def test_gradient_check_on_seeded_models():
    """Test analytic against numeric gradients for 10 seeded 3 x 8 models"""
    for seed in range(10):
        model = init_model(small_hp(seed=seed), n_bands=4)
        rng = np.random.default_rng(100 + seed)
        window = rng.random(4)
        target = forward(model, window) + 1e-3
        error = gradient_check(model, (window, target))
        print(f"  seed {seed}: max relative error {error:.2e}")
        assert error < 1e-4


def test_gradient_check_restores_parameters():
    model = init_model(small_hp(seed=1, layers=1, hidden=4), n_bands=4)
    before = [p.copy() for p in model.parameters()]
    gradient_check(model, ([0.2, 0.4, 0.6, 0.8], 0.5))
    for original, current in zip(before, model.parameters()):
        assert np.array_equal(original, current)


def test_gradient_check_at_zero_gradient_point():
    model = zero_model(small_hp(), n_bands=4)
    assert gradient_check(model, ([0.3, 0.1, 0.9, 0.5], 0.0)) < 1e-4


def test_gradient_check_catches_sign_flip():
    model = init_model(small_hp(seed=2, layers=1, hidden=4), n_bands=4)

    def flipped(m, window, target):
        return [-g for g in squared_error_gradients(m, window, target)]

    window = np.array([0.1, 0.7, 0.3, 0.9])
    target = forward(model, window) + 0.5
    assert gradient_check(model, (window, target), gradient_fn=flipped) > 1e-2


def test_adam_first_step_moves_by_learning_rate():
    param = np.array([1.0, -2.0, 0.5])
    optimizer = Adam([param], learning_rate=0.1)
    optimizer.step([np.array([3.0, -0.5, 0.0])])
    np.testing.assert_allclose(param, [0.9, -1.9, 0.5], atol=1e-6)


def test_adam_minimises_quadratic():
    param = np.array([5.0, -3.0])
    optimizer = Adam([param], learning_rate=0.1)
    for _ in range(2000):
        optimizer.step([2.0 * param])
    assert np.abs(param).max() < 0.05
