"""
Reallocation Simulator
Serves cell-wide PRB demand with only the planned bands active and
measures the extra delay of PRBs pushed to later TTIs (FIFO backlog)
"""

import json
import os
import sys
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.cell_config import CellConfig
from planning.band_planner import BandPlan
from traces.trace_model import DemandSeries
from utils.errors import ContractViolationError
from utils.logger import setup_logger

logger = setup_logger(__name__)

# Delays below this get one histogram bucket each; longer delays share
# power-of-two buckets keyed by their lower edge
HISTOGRAM_EXACT_MS = 1024

# Longest stretch served in one vectorised step
MAX_RUN_TTIS = 10_000


@dataclass
class DelayReport:
    """
    Sleep percentages and extra-delay statistics of one plan

    delay_histogram maps a delay in ms to a PRB count. Keys from
    HISTOGRAM_EXACT_MS upward are bucket lower edges: key k holds the
    delays in [k, 2k). avg_extra_delay_us, delayed_prbs and max_delay_ms
    are exact.
    """
    sleep_pct: List[float]
    avg_extra_delay_us: float
    total_prbs: int
    delayed_prbs: int
    max_delay_ms: int
    delay_histogram: Dict[int, int] = field(default_factory=dict)
    residual_backlog: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'sleep_pct': [float(v) for v in self.sleep_pct],
            'avg_extra_delay_us': float(self.avg_extra_delay_us),
            'total_prbs': int(self.total_prbs),
            'delayed_prbs': int(self.delayed_prbs),
            'max_delay_ms': int(self.max_delay_ms),
            'histogram': {str(k): int(v) for k, v in sorted(self.delay_histogram.items())},
            'residual_backlog': int(self.residual_backlog),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DelayReport':
        return cls(
            sleep_pct=list(data['sleep_pct']),
            avg_extra_delay_us=float(data['avg_extra_delay_us']),
            total_prbs=int(data['total_prbs']),
            delayed_prbs=int(data['delayed_prbs']),
            max_delay_ms=int(data['max_delay_ms']),
            delay_histogram={int(k): int(v) for k, v in data.get('histogram', {}).items()},
            residual_backlog=int(data.get('residual_backlog', 0)),
        )


def sleep_percentages(plan: BandPlan, n_bands: int, n_ttis: Optional[int] = None) -> List[float]:
    """
    Element f: percentage of TTIs with N_t < f

    Every period lasts activation_ms TTIs except a partial last period,
    which lasts whatever `n_ttis` leaves for it.
    """
    if len(plan) == 0:
        return [0.0] * n_bands
    counts = plan.as_array()
    weights = np.full(counts.size, plan.activation_ms, dtype=np.int64)
    if n_ttis is not None:
        tail = n_ttis - (counts.size - 1) * plan.activation_ms
        if not 0 < tail <= plan.activation_ms:
            raise ContractViolationError(f"{n_ttis} TTIs do not fit {counts.size} periods of {plan.activation_ms} ms")
        weights[-1] = tail
    total = int(weights.sum())
    return [100.0 * float(weights[counts < band].sum()) / total for band in range(1, n_bands + 1)]


class _DelayTally:
    """Exact delay totals plus a histogram with a bounded number of buckets"""

    def __init__(self):
        self.histogram = Counter()
        self.weighted = 0
        self.delayed = 0
        self.max_delay = 0

    def add_undelayed(self, count: int):
        if count:
            self.histogram[0] += count

    def add(self, delays: np.ndarray, counts: np.ndarray):
        keep = counts > 0
        delays, counts = delays[keep], counts[keep]
        if not delays.size:
            return
        self.weighted += int(np.dot(delays, counts))
        self.delayed += int(counts[delays >= 1].sum())
        self.max_delay = max(self.max_delay, int(delays.max()))

        keys = delays.copy()
        coarse = delays >= HISTOGRAM_EXACT_MS
        if coarse.any():
            _, exponent = np.frexp(delays[coarse].astype(np.float64))
            keys[coarse] = np.left_shift(np.int64(1), exponent.astype(np.int64) - 1)
        values, inverse = np.unique(keys, return_inverse=True)
        totals = np.zeros(values.size, dtype=np.int64)
        np.add.at(totals, inverse, counts)
        for key, total in zip(values.tolist(), totals.tolist()):
            self.histogram[key] += total


def _as_demand(demand: Union[DemandSeries, Sequence[int]]) -> DemandSeries:
    if isinstance(demand, DemandSeries):
        return demand
    return DemandSeries.from_list(list(demand))


def _runs(demand: DemandSeries, period_capacity: np.ndarray, activation_ms: int, n_ttis: int,
          split_every_period: bool):
    """Stretches of constant (demand, capacity) as (start, stop, demand, capacity), at most MAX_RUN_TTIS long"""
    step = demand.step_ms
    cuts = [np.array([0], dtype=np.int64)]
    cuts.append((np.flatnonzero(np.diff(demand.per_step)) + 1) * step)
    if split_every_period:
        cuts.append(np.arange(activation_ms, n_ttis, activation_ms, dtype=np.int64))
    else:
        cuts.append((np.flatnonzero(np.diff(period_capacity)) + 1) * activation_ms)
    cuts.append(np.arange(MAX_RUN_TTIS, n_ttis, MAX_RUN_TTIS, dtype=np.int64))
    starts = np.unique(np.concatenate(cuts))
    starts = starts[starts < n_ttis]
    stops = np.append(starts[1:], n_ttis)
    run_demand = demand.per_step[starts // step]
    run_capacity = period_capacity[starts // activation_ms]
    return zip(starts.tolist(), stops.tolist(), run_demand.tolist(), run_capacity.tolist())


def _serve(queue: deque, served: int, start: int, capacity: int, tally: _DelayTally):
    """
    Pop `served` PRBs off the FIFO queue during a busy stretch from `start`

    Queue segments are [first_tti, per_tti, count, offset]: `count` PRBs of
    a stream arriving `per_tti` per TTI from first_tti, `offset` of which
    were already served. The PRB of rank r leaves at TTI start + r // capacity.
    """
    bases, firsts, rates, offsets, points = [], [], [], [], []
    rank = 0
    for first, per_tti, count, offset in queue:
        if rank >= served:
            break
        end = min(rank + count, served)
        bases.append(rank)
        firsts.append(first)
        rates.append(per_tti)
        offsets.append(offset)
        # ranks at which the arrival TTI changes inside this segment
        points.append(np.arange(rank + (offset // per_tti + 1) * per_tti - offset, end, per_tti, dtype=np.int64))
        rank += count

    bases = np.asarray(bases, dtype=np.int64)
    points.append(bases)
    points.append(np.arange(capacity, served, capacity, dtype=np.int64))
    cuts = np.unique(np.concatenate(points))
    lengths = np.diff(np.append(cuts, served))

    segment = np.searchsorted(bases, cuts, side='right') - 1
    rates = np.asarray(rates, dtype=np.int64)[segment]
    arrival = np.asarray(firsts, dtype=np.int64)[segment] + (
        np.asarray(offsets, dtype=np.int64)[segment] + cuts - bases[segment]) // rates
    tally.add(start + cuts // capacity - arrival, lengths)

    remaining = served
    while remaining:
        head = queue[0]
        taken = min(remaining, head[2])
        head[2] -= taken
        head[3] += taken
        remaining -= taken
        if head[2] == 0:
            queue.popleft()


def simulate(demand: Union[DemandSeries, Sequence[int]], plan: BandPlan, cell: CellConfig,
             reset_backlog_each_period: bool = False) -> DelayReport:
    """
    FIFO service of per-TTI demand under a band plan

    At TTI j the active capacity is the sum of A_f over the N_t lowest bands.
    Backlog is served oldest first, then new arrivals; unserved PRBs carry
    over to the next TTI across every period boundary unless
    `reset_backlog_each_period` drops them at each activation boundary.

    Args:
        demand: Cell-wide PRBs per TTI
        plan: Band count per activation period
        cell: Cell whose capacities apply

    Returns:
        DelayReport; PRBs still queued at the end count as residual_backlog
    """
    demand = _as_demand(demand)
    period = plan.activation_ms
    n_ttis = len(demand)
    expected = len(plan) * period
    aligned = n_ttis == expected or (plan.partial_tail and expected - period < n_ttis <= expected)
    if not aligned:
        raise ContractViolationError(
            f"demand covers {n_ttis} TTIs but plan covers {len(plan)} x {period} ms"
        )

    counts = plan.as_array()
    if counts.size and counts.max() > cell.n_bands:
        raise ContractViolationError(f"plan asks for more than {cell.n_bands} bands")
    if demand.max() > cell.total_capacity:
        raise ContractViolationError(f"demand exceeds cell capacity {cell.total_capacity}")

    capacity_of = np.cumsum(cell.capacities)
    period_capacity = capacity_of[counts - 1] if counts.size else np.zeros(0, dtype=np.int64)

    queue = deque()
    backlog = 0
    dropped = 0
    tally = _DelayTally()

    for start, stop, arrivals, capacity in _runs(demand, period_capacity, period, n_ttis,
                                                 reset_backlog_each_period):
        if reset_backlog_each_period and start % period == 0 and backlog:
            dropped += backlog
            backlog = 0
            queue.clear()

        length = stop - start
        if backlog == 0 and arrivals <= capacity:
            tally.add_undelayed(arrivals * length)
            continue

        # served up to offset u is min(capacity * (u + 1), backlog + arrivals * (u + 1))
        if arrivals:
            queue.append([start, arrivals, arrivals * length, 0])
        if arrivals < capacity:
            busy = min(-(-backlog // (capacity - arrivals)), length)
        else:
            busy = length
        served = min(capacity * busy, backlog + arrivals * busy)
        _serve(queue, served, start, capacity, tally)

        if busy < length:
            tally.add_undelayed(arrivals * (length - busy))
            queue.clear()
            backlog = 0
        else:
            backlog += arrivals * length - served

    total_prbs = demand.total()
    avg_us = 1000.0 * tally.weighted / total_prbs if total_prbs else 0.0

    report = DelayReport(
        sleep_pct=sleep_percentages(plan, cell.n_bands, n_ttis),
        avg_extra_delay_us=avg_us,
        total_prbs=total_prbs,
        delayed_prbs=tally.delayed,
        max_delay_ms=tally.max_delay,
        delay_histogram=dict(sorted(tally.histogram.items())),
        residual_backlog=backlog + dropped,
    )
    logger.debug(
        f"Simulated {n_ttis} TTIs: {tally.delayed} delayed PRBs, avg extra delay {avg_us:.3f} us, "
        f"residual {report.residual_backlog}"
    )
    return report


def write_delay_report(report: DelayReport, path: str):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
        handle.write('\n')
