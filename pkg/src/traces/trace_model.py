"""
Trace data model
Per-TTI, per-band allocated PRB counts and the series derived from them
"""

import os
from dataclasses import dataclass, field
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np

import sys
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.bandsleep_config import MS_PER_DAY
from config.cell_config import CellConfig
from utils.errors import ContractViolationError, TraceValidationError


@dataclass(frozen=True)
class TtiLoad:
    """PRBs allocated per band in one 1 ms TTI"""
    tti_index: int
    allocated: Tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.allocated)


class TraceSeries:
    """
    Contiguous per-TTI allocations of one cell

    Stored as a grid of `step_ms`-long blocks: every TTI inside a block has
    the block's allocation vector. step_ms is 1 for traces read from a
    per-TTI file.
    """

    def __init__(self, cell: CellConfig, loads, step_ms: int = 1):
        if step_ms < 1:
            raise ContractViolationError("step_ms must be >= 1")
        loads = np.asarray(loads, dtype=np.int64)
        if loads.size == 0:
            loads = np.zeros((0, cell.n_bands), dtype=np.int64)
        if loads.ndim != 2 or loads.shape[1] != cell.n_bands:
            raise TraceValidationError(
                f"allocation rows must have {cell.n_bands} entries, got shape {loads.shape}"
            )
        self._validate(cell, loads, step_ms)
        loads.setflags(write=False)
        self.cell = cell
        self.loads = loads
        self.step_ms = step_ms

    @staticmethod
    def _validate(cell: CellConfig, loads: np.ndarray, step_ms: int):
        if loads.size == 0:
            return
        negative = np.argwhere(loads < 0)
        if len(negative):
            row, band = negative[0]
            raise TraceValidationError(
                f"negative allocation at tti {row * step_ms}, band {cell.bands[band].label}"
            )
        over = np.argwhere(loads > np.asarray(cell.capacities)[None, :])
        if len(over):
            row, band = over[0]
            raise TraceValidationError(
                f"allocated exceeds band capacity at tti {row * step_ms}, band {cell.bands[band].label} "
                f"({loads[row, band]} > {cell.bands[band].prbs_per_tti})"
            )

    @classmethod
    def from_rows(cls, cell: CellConfig, rows: Sequence[Sequence[int]]) -> 'TraceSeries':
        """Per-TTI trace from a list of allocation vectors (tti 0, 1, 2, ...)"""
        return cls(cell, np.asarray(rows, dtype=np.int64).reshape(-1, cell.n_bands), step_ms=1)

    def __len__(self) -> int:
        return self.loads.shape[0] * self.step_ms

    @property
    def n_ttis(self) -> int:
        return len(self)

    @property
    def n_days(self) -> int:
        """Number of complete days covered"""
        return self.n_ttis // MS_PER_DAY

    def tti(self, index: int) -> TtiLoad:
        if not 0 <= index < len(self):
            raise IndexError(f"tti {index} outside trace of {len(self)} TTIs")
        return TtiLoad(index, tuple(int(v) for v in self.loads[index // self.step_ms]))

    @property
    def ttis(self) -> List[TtiLoad]:
        """Materialised TtiLoad list; meant for short traces"""
        per_tti = np.repeat(self.loads, self.step_ms, axis=0)
        return [TtiLoad(index, tuple(row)) for index, row in enumerate(per_tti.tolist())]

    def block_totals(self) -> np.ndarray:
        """Cell-wide PRBs per TTI for each block"""
        return self.loads.sum(axis=1)

    def select_days(self, days: Sequence[int]) -> 'TraceSeries':
        """Concatenation of whole days, in the given order"""
        if MS_PER_DAY % self.step_ms:
            raise ContractViolationError(f"step of {self.step_ms} ms does not tile a day")
        per_day = MS_PER_DAY // self.step_ms
        n_days = self.loads.shape[0] // per_day
        for day in days:
            if not 0 <= day < n_days:
                raise ContractViolationError(f"day {day} outside trace of {n_days} days")
        if not days:
            return TraceSeries(self.cell, np.zeros((0, self.cell.n_bands), dtype=np.int64), self.step_ms)
        blocks = [self.loads[day * per_day:(day + 1) * per_day] for day in days]
        return TraceSeries(self.cell, np.concatenate(blocks), self.step_ms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TraceSeries):
            return NotImplemented
        if self.cell != other.cell or len(self) != len(other):
            return False
        if self.step_ms == other.step_ms:
            return bool(np.array_equal(self.loads, other.loads))
        return bool(np.array_equal(
            np.repeat(self.loads, self.step_ms, axis=0),
            np.repeat(other.loads, other.step_ms, axis=0),
        ))

    def __repr__(self) -> str:
        return f"TraceSeries(n_ttis={len(self)}, bands={self.cell.n_bands}, step_ms={self.step_ms})"


class DemandSeries(Sequence[int]):
    """Cell-wide PRBs per TTI, backed by the trace's block grid"""

    def __init__(self, per_step, step_ms: int = 1):
        self.per_step = np.asarray(per_step, dtype=np.int64).reshape(-1)
        self.step_ms = step_ms

    @classmethod
    def from_list(cls, values: Sequence[int]) -> 'DemandSeries':
        return cls(np.asarray(values, dtype=np.int64), 1)

    def __len__(self) -> int:
        return self.per_step.shape[0] * self.step_ms

    def __getitem__(self, index: Union[int, slice]):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(index)
        return int(self.per_step[index // self.step_ms])

    def __iter__(self) -> Iterator[int]:
        for value in self.per_step.tolist():
            for _ in range(self.step_ms):
                yield value

    def tolist(self) -> List[int]:
        return np.repeat(self.per_step, self.step_ms).tolist()

    def total(self) -> int:
        return int(self.per_step.sum()) * self.step_ms

    def max(self) -> int:
        return int(self.per_step.max()) if self.per_step.size else 0

    def __eq__(self, other) -> bool:
        if isinstance(other, DemandSeries):
            return self.tolist() == other.tolist()
        if isinstance(other, (list, tuple)):
            return self.tolist() == list(other)
        return NotImplemented

    def __repr__(self) -> str:
        return f"DemandSeries(n_ttis={len(self)}, step_ms={self.step_ms})"


@dataclass(frozen=True, eq=False)
class ThetaSeries:
    """
    Total PRBs across all bands per reallocation window

    `runs` holds one value per run of `repeat` identical consecutive windows.
    `padded` is set when the last window was completed with zero TTIs.
    """
    realloc_ms: int
    runs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    repeat: int = 1
    padded: bool = False

    def __len__(self) -> int:
        return int(self.runs.shape[0]) * self.repeat

    @property
    def values(self) -> List[int]:
        return np.repeat(self.runs, self.repeat).tolist()

    def total(self) -> int:
        return int(self.runs.sum()) * self.repeat
