"""
Trace CSV reader / writer
Per-TTI files use the header `tti,band,prbs`; compact files add a
`span_ms` column meaning the allocation holds for that many TTIs
"""

import os
import re
import sys
from typing import IO, Union

import numpy as np
import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.cell_config import CellConfig
from traces.trace_model import TraceSeries
from utils.errors import ConfigMismatchError, TraceParseError, TraceValidationError
from utils.logger import setup_logger

logger = setup_logger(__name__)

PER_TTI_COLUMNS = ['tti', 'band', 'prbs']
COMPACT_COLUMNS = ['tti', 'band', 'prbs', 'span_ms']

_INTEGER = r'\s*\d+\s*'

PathOrBuffer = Union[str, os.PathLike, IO]


def _open_source(path: PathOrBuffer):
    if isinstance(path, str) and path == '-':
        return sys.stdin
    if isinstance(path, (str, os.PathLike)) and not os.path.exists(path):
        raise FileNotFoundError(f"trace file does not exist: {path}")
    return path


def _read_frame(path: PathOrBuffer) -> pd.DataFrame:
    # header read as row 0 so the first data row cannot be taken for an index
    try:
        raw = pd.read_csv(_open_source(path), header=None, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise TraceParseError("empty file, expected header 'tti,band,prbs'", line_number=1)
    except pd.errors.ParserError as e:
        match = re.search(r'line (\d+)', str(e))
        line = int(match.group(1)) if match else None
        raise TraceParseError(f"wrong column count: {e}", line_number=line)
    header = [str(value).strip() for value in raw.iloc[0].tolist()]
    frame = raw.iloc[1:].reset_index(drop=True)
    frame.columns = header
    return frame


def _integer_column(frame: pd.DataFrame, name: str) -> np.ndarray:
    column = frame[name].fillna('')
    ok = column.str.fullmatch(_INTEGER)
    if not ok.all():
        row = int(np.flatnonzero(~ok.to_numpy())[0])
        raise TraceParseError(
            f"column '{name}' must be a non-negative integer, got {column.iloc[row]!r}",
            line_number=row + 2,
        )
    return column.str.strip().astype(np.int64).to_numpy()


def parse_trace(path: PathOrBuffer, cell: CellConfig) -> TraceSeries:
    """
    Read and validate a trace CSV

    TTIs absent from the file are materialised with zero allocation.

    Args:
        path: CSV path, open text buffer, or '-' for stdin
        cell: Cell configuration the band labels refer to

    Returns:
        Validated TraceSeries
    """
    frame = _read_frame(path)
    columns = list(frame.columns)
    if columns == PER_TTI_COLUMNS:
        compact = False
    elif columns == COMPACT_COLUMNS:
        compact = True
    else:
        raise TraceParseError(
            f"header must be 'tti,band,prbs' or 'tti,band,prbs,span_ms', got {','.join(columns)!r}",
            line_number=1,
        )
    if frame.empty:
        return TraceSeries(cell, np.zeros((0, cell.n_bands), dtype=np.int64))

    ttis = _integer_column(frame, 'tti')
    prbs = _integer_column(frame, 'prbs')
    spans = _integer_column(frame, 'span_ms') if compact else np.ones_like(ttis)
    if (spans < 1).any():
        row = int(np.flatnonzero(spans < 1)[0])
        raise TraceParseError("span_ms must be >= 1", line_number=row + 2)

    labels = frame['band'].str.strip()
    lookup = {label: index for index, label in enumerate(cell.labels)}
    bands = labels.map(lookup)
    if bands.isna().any():
        row = int(np.flatnonzero(bands.isna().to_numpy())[0])
        raise ConfigMismatchError(
            f"line {row + 2}: unknown band label '{labels.iloc[row]}' (cell has {cell.labels})"
        )
    bands = bands.astype(np.int64).to_numpy()

    capacities = np.asarray(cell.capacities, dtype=np.int64)
    over = prbs > capacities[bands]
    if over.any():
        row = int(np.flatnonzero(over)[0])
        raise TraceValidationError(
            f"allocated exceeds band capacity at tti {ttis[row]}, band {cell.labels[bands[row]]} "
            f"({prbs[row]} > {capacities[bands[row]]})"
        )

    _check_overlaps(ttis, bands, spans, cell)

    ends = ttis + spans
    horizon = int(ends.max())
    step = int(np.gcd.reduce(np.concatenate([ttis, spans, [horizon]])))

    loads = np.zeros((horizon // step, cell.n_bands), dtype=np.int64)
    counts = spans // step
    first = ttis // step
    offsets = np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts)
    rows = np.repeat(first, counts) + offsets
    loads[rows, np.repeat(bands, counts)] = np.repeat(prbs, counts)

    trace = TraceSeries(cell, loads, step_ms=step)
    logger.debug(f"Parsed {len(frame)} rows into {len(trace)} TTIs (block {step} ms)")
    return trace


def _check_overlaps(ttis: np.ndarray, bands: np.ndarray, spans: np.ndarray, cell: CellConfig):
    order = np.lexsort((ttis, bands))
    t, b, s = ttis[order], bands[order], spans[order]
    clash = (b[1:] == b[:-1]) & (t[1:] < t[:-1] + s[:-1])
    if clash.any():
        index = int(np.flatnonzero(clash)[0]) + 1
        raise TraceValidationError(
            f"duplicate allocation for tti {t[index]}, band {cell.labels[b[index]]}"
        )


def trace_to_frame(trace: TraceSeries, compact: bool = False) -> pd.DataFrame:
    """Canonical rows sorted by tti then band"""
    labels = np.asarray(trace.cell.labels, dtype=object)
    n_bands = trace.cell.n_bands

    if not compact:
        per_tti = np.repeat(trace.loads, trace.step_ms, axis=0)
        n = per_tti.shape[0]
        return pd.DataFrame({
            'tti': np.repeat(np.arange(n, dtype=np.int64), n_bands),
            'band': np.tile(labels, n),
            'prbs': per_tti.reshape(-1),
        }, columns=PER_TTI_COLUMNS)

    parts = []
    n_steps = trace.loads.shape[0]
    for band in range(n_bands):
        values = trace.loads[:, band]
        if n_steps == 0:
            continue
        starts = np.concatenate([[0], np.flatnonzero(np.diff(values)) + 1])
        stops = np.append(starts[1:], n_steps)
        run_values = values[starts]
        # zero runs are implied, except the last one which pins the horizon
        keep = run_values != 0
        keep[-1] = True
        parts.append(pd.DataFrame({
            'tti': starts[keep] * trace.step_ms,
            'band_index': band,
            'prbs': run_values[keep],
            'span_ms': (stops[keep] - starts[keep]) * trace.step_ms,
        }))
    if not parts:
        return pd.DataFrame(columns=COMPACT_COLUMNS)
    frame = pd.concat(parts, ignore_index=True).sort_values(['tti', 'band_index'], kind='mergesort')
    frame['band'] = labels[frame['band_index'].to_numpy()]
    return frame[COMPACT_COLUMNS].reset_index(drop=True)


def write_trace(trace: TraceSeries, path: PathOrBuffer, compact: bool = False):
    """
    Write a trace CSV

    Args:
        trace: Trace to serialise
        path: Destination path, open text buffer, or '-' for stdout
        compact: Emit the run-length form instead of one row per TTI and band
    """
    frame = trace_to_frame(trace, compact=compact)
    target = sys.stdout if isinstance(path, str) and path == '-' else path
    frame.to_csv(target, index=False, lineterminator='\n')
    logger.debug(f"Wrote {len(frame)} trace rows ({'compact' if compact else 'per-TTI'})")
