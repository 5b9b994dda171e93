"""
Band Planner
Activation thresholds, required bands per reallocation window and per
activation period (reference strategy with perfect traffic knowledge)
"""

import math
import os
import sys
from dataclasses import dataclass
from typing import IO, Tuple, Union

import numpy as np
import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.cell_config import CellConfig
from traces.trace_model import ThetaSeries
from utils.errors import ContractViolationError, TraceParseError
from utils.logger import setup_logger

logger = setup_logger(__name__)

PLAN_COLUMNS = ['period_index', 'n_bands']


@dataclass(frozen=True)
class Thresholds:
    """S_1 < ... < S_{F-1}; `capacity` is delta * sum(A_f)"""
    values: Tuple[int, ...]
    capacity: int

    @property
    def n_bands(self) -> int:
        return len(self.values) + 1


@dataclass(frozen=True)
class BandPlan:
    """Required band count N_t per activation period"""
    activation_ms: int
    counts: Tuple[int, ...]
    partial_tail: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'counts', tuple(int(n) for n in self.counts))
        if any(n < 1 for n in self.counts):
            raise ContractViolationError("band counts must be >= 1")

    def __len__(self) -> int:
        return len(self.counts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    def sub_plan(self, start: int, stop: int) -> 'BandPlan':
        return BandPlan(self.activation_ms, self.counts[start:stop])


def thresholds(cell: CellConfig) -> Thresholds:
    """S_j = delta * sum_{f<=j} A_f for j = 1..F-1"""
    cumulative = np.cumsum(cell.capacities) * cell.realloc_ms
    return Thresholds(values=tuple(int(v) for v in cumulative[:-1]), capacity=int(cumulative[-1]))


def required_bands_window(theta: int, th: Thresholds) -> int:
    """
    Number of bands needed to carry theta PRBs in one reallocation window

    Upper bounds are inclusive: theta == S_j needs j bands.
    """
    if theta < 0 or theta > th.capacity:
        raise ContractViolationError(f"theta {theta} outside [0, {th.capacity}]")
    for index, bound in enumerate(th.values, 1):
        if theta <= bound:
            return index
    return th.n_bands


def required_bands_windows(thetas: np.ndarray, th: Thresholds) -> np.ndarray:
    """Vectorised required_bands_window"""
    thetas = np.asarray(thetas, dtype=np.int64)
    if thetas.size and (thetas.min() < 0 or thetas.max() > th.capacity):
        raise ContractViolationError(f"theta outside [0, {th.capacity}]")
    # count of thresholds strictly below theta
    return np.searchsorted(np.asarray(th.values, dtype=np.int64), thetas, side='left') + 1


def plan_reference(theta: ThetaSeries, cell: CellConfig) -> BandPlan:
    """
    N_t = max over the I = T / delta windows of activation period t

    A trailing partial period is planned from the windows it has and the
    plan is flagged `partial_tail`.
    """
    if theta.realloc_ms != cell.realloc_ms:
        raise ContractViolationError(
            f"theta built with delta={theta.realloc_ms} ms, cell uses {cell.realloc_ms} ms"
        )
    if len(theta) == 0:
        return BandPlan(cell.activation_ms, ())

    th = thresholds(cell)
    per_run = required_bands_windows(theta.runs, th)

    windows = cell.windows_per_period
    unit = math.gcd(windows, theta.repeat)
    per_unit = np.repeat(per_run, theta.repeat // unit) if theta.repeat != unit else per_run
    units_per_period = windows // unit

    pad = (-per_unit.size) % units_per_period
    if pad:
        # padding windows need one band, which never raises the max
        per_unit = np.concatenate([per_unit, np.ones(pad, dtype=np.int64)])
    counts = per_unit.reshape(-1, units_per_period).max(axis=1)

    plan = BandPlan(cell.activation_ms, tuple(counts.tolist()), partial_tail=bool(pad) or theta.padded)
    logger.debug(f"Planned {len(plan)} activation periods of {cell.activation_ms} ms")
    return plan


def write_plan_csv(plan: BandPlan, path: Union[str, IO]):
    frame = pd.DataFrame({'period_index': np.arange(len(plan)), 'n_bands': plan.as_array()}, columns=PLAN_COLUMNS)
    target = sys.stdout if isinstance(path, str) and path == '-' else path
    frame.to_csv(target, index=False, lineterminator='\n')


def read_plan_csv(path: Union[str, IO], activation_ms: int) -> BandPlan:
    source = sys.stdin if isinstance(path, str) and path == '-' else path
    frame = pd.read_csv(source)
    if list(frame.columns) != PLAN_COLUMNS:
        raise TraceParseError(f"plan header must be 'period_index,n_bands', got {list(frame.columns)}", line_number=1)
    indices = frame['period_index'].to_numpy()
    if not np.array_equal(indices, np.arange(len(frame))):
        raise TraceParseError("period_index must run 0, 1, 2, ... without gaps")
    return BandPlan(activation_ms, tuple(frame['n_bands'].astype(np.int64).tolist()))
