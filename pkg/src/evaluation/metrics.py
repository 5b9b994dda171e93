"""
Forecast quality metrics on integer band counts
"""

import os
import sys
from dataclasses import dataclass, asdict
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from forecast.band_predictor import PredictionSeries
from planning.band_planner import BandPlan
from utils.errors import ContractViolationError

Counts = Union[PredictionSeries, BandPlan, Sequence[int]]


@dataclass
class MetricReport:
    rmse: float
    accuracy: float
    qos_preservation: float
    n: int
    rmse_raw: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _counts(values: Counts) -> np.ndarray:
    if isinstance(values, (PredictionSeries, BandPlan)):
        values = values.counts
    return np.asarray(list(values), dtype=np.int64)


def _pair(pred: Counts, actual: Counts) -> Tuple[np.ndarray, np.ndarray]:
    p, a = _counts(pred), _counts(actual)
    if p.size != a.size:
        raise ContractViolationError(f"{p.size} predictions against {a.size} actual values")
    if p.size == 0:
        raise ContractViolationError("metrics need at least one value")
    return p, a


def rmse(pred: Counts, actual: Counts) -> float:
    p, a = _pair(pred, actual)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def accuracy(pred: Counts, actual: Counts) -> float:
    """Share of exact matches"""
    p, a = _pair(pred, actual)
    return float(np.mean(p == a))


def qos_preservation(pred: Counts, actual: Counts) -> float:
    """Share of periods with at least as many bands as required"""
    p, a = _pair(pred, actual)
    return float(np.mean(p >= a))


def rmse_raw(pred: PredictionSeries, actual: Counts) -> float:
    """RMSE of the denormalised outputs before rounding"""
    raw = np.asarray(pred.raw, dtype=np.float64)
    a = _counts(actual)
    if raw.size != a.size or raw.size == 0:
        raise ContractViolationError(f"{raw.size} raw outputs against {a.size} actual values")
    return float(np.sqrt(np.mean((raw - a) ** 2)))


def evaluate(pred: Counts, actual: Counts) -> MetricReport:
    p, a = _pair(pred, actual)
    raw = rmse_raw(pred, a) if isinstance(pred, PredictionSeries) else None
    return MetricReport(
        rmse=rmse(p, a),
        accuracy=accuracy(p, a),
        qos_preservation=qos_preservation(p, a),
        n=int(p.size),
        rmse_raw=raw,
    )
