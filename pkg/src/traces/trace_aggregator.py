"""
Trace aggregation
Reallocation-window totals (theta) and cell-wide per-TTI demand
"""

import math
import os
import sys

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from traces.trace_model import DemandSeries, ThetaSeries, TraceSeries


def aggregate_theta(trace: TraceSeries) -> ThetaSeries:
    """
    Total PRBs across all bands in each reallocation window

    A trailing partial window is completed with zero TTIs and flagged.

    Args:
        trace: Validated trace

    Returns:
        ThetaSeries with one value per window (run-length encoded)
    """
    delta = trace.cell.realloc_ms
    totals = trace.block_totals()
    if totals.size == 0:
        return ThetaSeries(realloc_ms=delta)

    step = trace.step_ms
    if step % delta == 0:
        # every block holds whole windows of identical load
        return ThetaSeries(realloc_ms=delta, runs=totals * delta, repeat=step // delta)

    unit = math.gcd(step, delta)
    per_unit = np.repeat(totals, step // unit) * unit
    per_window = delta // unit
    pad = (-per_unit.size) % per_window
    if pad:
        per_unit = np.concatenate([per_unit, np.zeros(pad, dtype=np.int64)])
    runs = per_unit.reshape(-1, per_window).sum(axis=1)
    return ThetaSeries(realloc_ms=delta, runs=runs, repeat=1, padded=bool(pad))


def total_demand_per_tti(trace: TraceSeries) -> DemandSeries:
    """Sum over bands of allocated PRBs, one element per TTI"""
    return DemandSeries(trace.block_totals(), trace.step_ms)
