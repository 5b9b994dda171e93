"""
Synthetic traffic generator
Seeded multi-band traces with a diurnal cosine profile and Poisson bursts
"""

import os
import sys
from dataclasses import dataclass
from datetime import timedelta

import numpy as np
from dateutil import parser as date_parser

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.bandsleep_config import MS_PER_DAY
from config.cell_config import CellConfig
from traces.trace_model import TraceSeries
from utils.errors import ContractViolationError
from utils.logger import setup_logger

logger = setup_logger(__name__)

MS_PER_HOUR = 3_600_000
MEAN_BURST_SECONDS = 30


@dataclass(frozen=True)
class SynthParams:
    """
    Shape of a synthetic trace

    peak_load / trough_load are fractions of total cell capacity at the
    diurnal maximum (12:00) and minimum (00:00).
    """
    days: int
    peak_load: float
    trough_load: float
    burst_rate: float = 0.0
    burst_scale: float = 1.0
    seed: int = 0
    weekend_factor: float = 1.0
    start_date: str = '2023-02-20'
    step_ms: int = 1_000

    def validate(self):
        if self.days < 0:
            raise ContractViolationError("days must be >= 0")
        if not 0.0 <= self.peak_load <= 1.0:
            raise ContractViolationError("peak_load must lie in [0, 1]")
        if not 0.0 <= self.trough_load <= self.peak_load:
            raise ContractViolationError("trough_load must lie in [0, peak_load]")
        if self.burst_rate < 0:
            raise ContractViolationError("burst_rate must be >= 0")
        if self.burst_scale < 1:
            raise ContractViolationError("burst_scale must be >= 1")
        if not 0.0 <= self.weekend_factor <= 1.0:
            raise ContractViolationError("weekend_factor must lie in [0, 1]")
        if self.step_ms < 1 or MS_PER_DAY % self.step_ms:
            raise ContractViolationError("step_ms must divide one day")
        if not 0 <= self.seed < 2 ** 64:
            raise ContractViolationError("seed must be a 64-bit unsigned integer")


def diurnal_fraction(hour: np.ndarray, peak_load: float, trough_load: float) -> np.ndarray:
    """Load fraction at a given hour of day: trough at 00:00, peak at 12:00"""
    return trough_load + (peak_load - trough_load) / 2.0 * (1.0 - np.cos(2.0 * np.pi * hour / 24.0))


def _weekend_mask(params: SynthParams, n_steps: int) -> np.ndarray:
    start = date_parser.isoparse(params.start_date)
    steps_per_day = MS_PER_DAY // params.step_ms
    weekend_days = np.array(
        [(start + timedelta(days=day)).weekday() >= 5 for day in range(params.days)], dtype=bool
    )
    return np.repeat(weekend_days, steps_per_day)[:n_steps]


def _burst_multiplier(params: SynthParams, rng: np.random.Generator, n_steps: int) -> np.ndarray:
    hours = params.days * 24
    per_hour = rng.poisson(params.burst_rate, size=hours)
    n_bursts = int(per_hour.sum())
    multiplier = np.ones(n_steps)
    if n_bursts == 0 or params.burst_scale == 1.0:
        return multiplier

    hour_of_burst = np.repeat(np.arange(hours, dtype=np.int64), per_hour)
    offset_ms = rng.integers(0, MS_PER_HOUR, size=n_bursts)
    duration_ms = (1 + rng.poisson(MEAN_BURST_SECONDS - 1, size=n_bursts)) * 1000
    start_ms = hour_of_burst * MS_PER_HOUR + offset_ms
    end_ms = np.minimum(start_ms + duration_ms, n_steps * params.step_ms)

    # difference array over blocks; overlapping bursts do not compound
    edges = np.zeros(n_steps + 1, dtype=np.int64)
    np.add.at(edges, start_ms // params.step_ms, 1)
    np.add.at(edges, -(-end_ms // params.step_ms), -1)
    active = np.cumsum(edges[:-1]) > 0
    multiplier[active] = params.burst_scale
    return multiplier


def pack_lowest_first(demand: np.ndarray, capacities) -> np.ndarray:
    """Spread per-TTI cell demand over bands, filling band 1 first"""
    capacities = np.asarray(capacities, dtype=np.int64)
    below = np.concatenate([[0], np.cumsum(capacities)[:-1]])
    return np.clip(demand[:, None] - below[None, :], 0, capacities[None, :])


def generate_trace(params: SynthParams, cell: CellConfig) -> TraceSeries:
    """
    Generate a deterministic synthetic trace

    Demand is computed once per `step_ms` block and held for every TTI of
    the block, which keeps reallocation-window sums exact.

    Args:
        params: Trace shape and seed
        cell: Cell whose bands receive the demand

    Returns:
        TraceSeries of days x 86,400,000 TTIs
    """
    params.validate()
    n_steps = params.days * (MS_PER_DAY // params.step_ms)
    if n_steps == 0:
        return TraceSeries(cell, np.zeros((0, cell.n_bands), dtype=np.int64), params.step_ms)

    rng = np.random.default_rng(params.seed)
    start_ms = np.arange(n_steps, dtype=np.int64) * params.step_ms
    hour = (start_ms % MS_PER_DAY) / MS_PER_HOUR

    fraction = diurnal_fraction(hour, params.peak_load, params.trough_load)
    if params.weekend_factor != 1.0:
        fraction = np.where(_weekend_mask(params, n_steps), fraction * params.weekend_factor, fraction)
    fraction = fraction * _burst_multiplier(params, rng, n_steps)

    total_capacity = cell.total_capacity
    demand = np.floor(fraction * total_capacity + 0.5).astype(np.int64)
    demand = np.clip(demand, 0, total_capacity)

    loads = pack_lowest_first(demand, cell.capacities)
    logger.info(
        f"✓ Generated {params.days} day(s) of synthetic traffic "
        f"(seed={params.seed}, mean load {demand.mean() / total_capacity:.1%})"
    )
    return TraceSeries(cell, loads, params.step_ms)
