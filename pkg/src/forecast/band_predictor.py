"""
Band predictor
One-step-ahead band-count forecasts from true history, the persistence
baseline, and JSON model checkpoints
"""

import json
import os
import sys
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Union

import numpy as np
from jsonschema import ValidationError, validate

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.bandsleep_config import BandSleepConfig
from forecast.lstm_network import Hyperparams, LstmLayer, LstmModel, forward_batch
from planning.band_planner import BandPlan
from utils.errors import ConfigMismatchError, ContractViolationError, InsufficientHistoryError
from utils.logger import setup_logger

logger = setup_logger(__name__)

CHECKPOINT_FORMAT = 'bandsleep-lstm'
CHECKPOINT_VERSION = 1

History = Union[BandPlan, Sequence[int]]


@dataclass(frozen=True)
class PredictionSeries:
    """Predicted band counts and the denormalised outputs they were rounded from"""
    counts: tuple
    raw: tuple

    def __len__(self) -> int:
        return len(self.counts)

    def as_plan(self, activation_ms: int) -> BandPlan:
        return BandPlan(activation_ms, self.counts)


def counts_from_raw(raw, n_bands: int) -> np.ndarray:
    """Round half up, then clamp to [1, F]"""
    rounded = np.floor(np.asarray(raw, dtype=np.float64) + 0.5)
    return np.clip(rounded, 1, n_bands).astype(np.int64)


def _history_counts(history: History) -> np.ndarray:
    if isinstance(history, BandPlan):
        return history.as_array()
    return np.asarray(list(history), dtype=np.int64)


def predict_series(model: LstmModel, history: History, horizon: int) -> PredictionSeries:
    """
    Teacher-forced forecasts for the last `horizon` intervals

    With n = |history| the predictions target indices n - horizon + 1 .. n,
    where index n is the next, not yet observed interval. Each prediction
    reads the window_k true counts right before its index.

    Args:
        model: Trained network
        history: Observed band counts
        horizon: Number of predictions

    Returns:
        PredictionSeries of length horizon
    """
    counts = _history_counts(history)
    k = model.window_k
    n = counts.size
    if horizon < 0:
        raise ContractViolationError("horizon must be >= 0")
    if n < k or n - horizon + 1 < k:
        raise InsufficientHistoryError(
            f"insufficient history: {n} periods cannot feed {horizon} prediction(s) with window {k}"
        )
    if horizon == 0:
        return PredictionSeries((), ())

    normalized = model.normalize(counts)
    first = n - horizon + 1
    windows = np.stack([normalized[p - k:p] for p in range(first, n + 1)])
    outputs, _ = forward_batch(model, windows)
    raw = model.denormalize(outputs)
    predicted = counts_from_raw(raw, model.n_bands)
    return PredictionSeries(tuple(predicted.tolist()), tuple(float(v) for v in raw))


def forecast_range(model: LstmModel, truth: History, start: int, end: int) -> PredictionSeries:
    """Predictions aligned with truth[start:end]"""
    counts = _history_counts(truth)
    if not 0 <= start <= end <= counts.size:
        raise ContractViolationError(f"range [{start}, {end}) outside a series of {counts.size}")
    if start == end:
        return PredictionSeries((), ())
    return predict_series(model, counts[:end - 1], end - start)


def baseline_persistence(history: History, horizon: int) -> PredictionSeries:
    """Each prediction repeats the previous true value; same indexing as predict_series"""
    counts = _history_counts(history)
    if counts.size == 0:
        raise InsufficientHistoryError("persistence needs at least one observed period")
    if not 0 <= horizon <= counts.size:
        raise InsufficientHistoryError(
            f"insufficient history: {counts.size} periods cannot feed {horizon} prediction(s)"
        )
    predicted = counts[counts.size - horizon:]
    return PredictionSeries(tuple(predicted.tolist()), tuple(float(v) for v in predicted))


def baseline_persistence_range(truth: History, start: int, end: int) -> PredictionSeries:
    counts = _history_counts(truth)
    if not 1 <= start <= end <= counts.size:
        raise ContractViolationError(f"range [{start}, {end}) outside a series of {counts.size}")
    return baseline_persistence(counts[:end - 1], end - start)


def checkpoint_to_dict(model: LstmModel) -> Dict[str, Any]:
    """
    Serialisable checkpoint

    Layer W is row-major (4H) x (input + H) with gate row blocks ordered
    input, forget, output, candidate.
    """
    hp = model.hyperparams or Hyperparams(hidden_size=model.hidden_size, num_layers=model.num_layers)
    return {
        'format': CHECKPOINT_FORMAT,
        'version': CHECKPOINT_VERSION,
        'hyperparams': hp.to_dict(),
        'n_bands': model.n_bands,
        'norm': {'offset': model.norm_offset, 'scale': model.norm_scale},
        'layers': [{'W': layer.W.tolist(), 'b': layer.b.tolist()} for layer in model.layers],
        'head': {'w': model.head_w.tolist(), 'b': float(model.head_b[0])},
    }


def checkpoint_from_dict(data: Dict[str, Any]) -> LstmModel:
    try:
        validate(instance=data, schema=BandSleepConfig.CHECKPOINT_SCHEMA)
    except ValidationError as exc:
        raise ConfigMismatchError(f"invalid checkpoint: {exc.message}") from exc

    layers: List[LstmLayer] = []
    for entry in data['layers']:
        W = np.array(entry['W'], dtype=np.float64)
        b = np.array(entry['b'], dtype=np.float64)
        if W.ndim != 2 or b.ndim != 1 or W.shape[0] != b.shape[0] or b.shape[0] % 4:
            raise ConfigMismatchError("invalid checkpoint: layer shapes do not match")
        layers.append(LstmLayer(W, b))
    head_w = np.array(data['head']['w'], dtype=np.float64)
    if head_w.shape != (layers[-1].hidden_size,):
        raise ConfigMismatchError("invalid checkpoint: head width does not match the last layer")
    try:
        hp = Hyperparams(**data['hyperparams'])
    except TypeError as exc:
        raise ConfigMismatchError(f"invalid checkpoint hyperparameters: {exc}") from exc

    return LstmModel(
        layers=layers,
        head_w=head_w,
        head_b=np.array([data['head']['b']], dtype=np.float64),
        n_bands=int(data['n_bands']),
        norm_offset=float(data['norm']['offset']),
        norm_scale=float(data['norm']['scale']),
        hyperparams=hp,
    )


def save_checkpoint(model: LstmModel, path: str):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(checkpoint_to_dict(model), handle)
        handle.write('\n')
    logger.info(f"✓ Saved checkpoint to {path}")


def load_checkpoint(path: str) -> LstmModel:
    with open(path, 'r', encoding='utf-8') as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigMismatchError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    return checkpoint_from_dict(data)
