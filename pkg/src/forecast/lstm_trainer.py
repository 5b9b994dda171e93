"""
LSTM trainer
Sliding-window datasets over band plans, mini-batch BPTT with Adam and a
finite-difference gradient checker
"""

import os
import sys
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from forecast.adam_optimizer import Adam
from forecast.lstm_network import (
    Hyperparams, LstmModel, backward_batch, forward, forward_batch, init_model,
    normalization_for, squared_error_gradients,
)
from planning.band_planner import BandPlan
from utils.errors import (
    ContractViolationError, InsufficientHistoryError, NumericError, TrainingDivergedError,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)

GradientFn = Callable[[LstmModel, np.ndarray, float], List[np.ndarray]]


@dataclass
class Dataset:
    """Normalised (window, next value) pairs, in chronological order"""
    inputs: np.ndarray
    targets: np.ndarray
    n_bands: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64).reshape(-1)
        if self.inputs.ndim != 2 or self.inputs.shape[0] != self.targets.shape[0]:
            raise ContractViolationError(
                f"inputs {self.inputs.shape} and targets {self.targets.shape} do not pair up"
            )

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def window_k(self) -> int:
        return self.inputs.shape[1]

    def split(self, val_split: float) -> Tuple['Dataset', 'Dataset']:
        """Chronological split: the last `val_split` share of samples validates"""
        if not 0.0 <= val_split < 1.0:
            raise ContractViolationError("val_split must lie in [0, 1)")
        n_val = int(len(self) * val_split)
        cut = len(self) - n_val
        return (
            Dataset(self.inputs[:cut], self.targets[:cut], self.n_bands),
            Dataset(self.inputs[cut:], self.targets[cut:], self.n_bands),
        )


@dataclass
class TrainingResult:
    model: LstmModel
    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)


def _plan_counts(plan: Union[BandPlan, Sequence[int]]) -> np.ndarray:
    if isinstance(plan, BandPlan):
        return plan.as_array()
    return np.asarray(list(plan), dtype=np.int64)


def make_windows(plan: Union[BandPlan, Sequence[int]], k: int, n_bands: int) -> Dataset:
    """
    Sliding windows of k past band counts and the count that follows

    Args:
        plan: Band counts per activation period
        k: Window length
        n_bands: F, fixes the normalisation n -> (n - 1) / (F - 1)

    Returns:
        Dataset of |plan| - k samples
    """
    counts = _plan_counts(plan)
    if k < 1:
        raise ContractViolationError("window length must be >= 1")
    if counts.size <= k:
        raise InsufficientHistoryError(f"insufficient history: {counts.size} periods for a window of {k}")
    offset, scale = normalization_for(n_bands)
    normalized = (counts.astype(np.float64) - offset) / scale
    inputs = np.lib.stride_tricks.sliding_window_view(normalized, k)[:-1].copy()
    return Dataset(inputs, normalized[k:].copy(), n_bands)


def _rmse(model: LstmModel, dataset: Dataset, batch_size: int) -> float:
    if len(dataset) == 0:
        return float('nan')
    squared = 0.0
    for start in range(0, len(dataset), batch_size):
        y, _ = forward_batch(model, dataset.inputs[start:start + batch_size])
        squared += float(np.sum((y - dataset.targets[start:start + batch_size]) ** 2))
    return float(np.sqrt(squared / len(dataset)))


def train(dataset: Dataset, hp: Hyperparams, val_split: float = 0.0,
          validation: Optional[Dataset] = None) -> TrainingResult:
    """
    Train a fresh model with mini-batch BPTT and Adam

    The loss curve holds the RMSE over the whole training set after each
    epoch. Initialisation and batch order are fixed by hp.seed.

    Args:
        dataset: Training samples (windows of hp.window_k values)
        hp: Hyperparameters
        val_split: Share of the most recent samples held out for validation
        validation: Explicit validation set; overrides val_split

    Returns:
        TrainingResult with the trained model and per-epoch losses
    """
    if len(dataset) == 0:
        raise InsufficientHistoryError("cannot train on an empty dataset")
    if dataset.window_k != hp.window_k:
        raise ContractViolationError(
            f"dataset windows have {dataset.window_k} values, hyperparameters expect {hp.window_k}"
        )
    train_set, val_set = (dataset, validation) if validation is not None else dataset.split(val_split)
    if len(train_set) == 0:
        raise InsufficientHistoryError("validation split leaves no training samples")

    model = init_model(hp, dataset.n_bands)
    result = TrainingResult(model)
    if hp.epochs == 0:
        return result

    optimizer = Adam(model.parameters(), hp.learning_rate)
    shuffle_rng = np.random.default_rng([hp.seed, 1])
    n = len(train_set)

    for epoch in range(1, hp.epochs + 1):
        order = shuffle_rng.permutation(n)
        try:
            for start in range(0, n, hp.batch_size):
                batch = order[start:start + hp.batch_size]
                y, cache = forward_batch(model, train_set.inputs[batch])
                dy = 2.0 * (y - train_set.targets[batch]) / batch.size
                grads = backward_batch(model, cache, dy)
                if not all(np.all(np.isfinite(g)) for g in grads):
                    raise NumericError("non-finite gradient")
                optimizer.step(grads)
            loss = _rmse(model, train_set, hp.batch_size)
        except NumericError as exc:
            logger.error(f"✗ Training diverged in epoch {epoch}: {exc}")
            raise TrainingDivergedError(epoch, float('nan')) from exc
        if not np.isfinite(loss):
            logger.error(f"✗ Training diverged in epoch {epoch}")
            raise TrainingDivergedError(epoch, loss)

        result.train_loss.append(loss)
        if val_set is not None and len(val_set):
            result.val_loss.append(_rmse(model, val_set, hp.batch_size))
        logger.debug(f"epoch {epoch}/{hp.epochs}: train RMSE {loss:.6f}")

    logger.info(
        f"✓ Trained {hp.num_layers}x{hp.hidden_size} LSTM for {hp.epochs} epochs "
        f"on {n} samples (final RMSE {result.train_loss[-1]:.4f})"
    )
    return result


def gradient_check(model: LstmModel, sample: Tuple[Sequence[float], float],
                   gradient_fn: Optional[GradientFn] = None, step: float = 1e-5) -> float:
    """
    Compare analytic gradients of (y - target)^2 against central differences

    Every parameter is perturbed by +/- step in place and restored.

    Returns:
        max |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
    """
    window, target = np.asarray(sample[0], dtype=np.float64), float(sample[1])
    gradient_fn = gradient_fn or squared_error_gradients
    analytic = gradient_fn(model, window, target)

    def loss() -> float:
        return (forward(model, window) - target) ** 2

    worst = 0.0
    for param, grad in zip(model.parameters(), analytic):
        flat_param = param.reshape(-1)
        flat_grad = np.asarray(grad).reshape(-1)
        for index in range(flat_param.size):
            original = flat_param[index]
            flat_param[index] = original + step
            plus = loss()
            flat_param[index] = original - step
            minus = loss()
            flat_param[index] = original
            numeric = (plus - minus) / (2.0 * step)
            a = flat_grad[index]
            error = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, error)
    return worst
