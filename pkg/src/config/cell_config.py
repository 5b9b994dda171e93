"""
Cell Configuration
Band descriptors, reallocation period and activation period of one cell
"""

import json
import os
from dataclasses import dataclass, replace
from typing import Dict, Any, List, Optional, Tuple

import jsonschema

import sys
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.bandsleep_config import BandSleepConfig
from utils.errors import ConfigMismatchError
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class BandConfig:
    """One carrier of the cell; band_id 1 is the lowest frequency"""
    band_id: int
    label: str
    prbs_per_tti: int
    power_weight: float

    def __post_init__(self):
        if self.prbs_per_tti < 1:
            raise ConfigMismatchError(f"band {self.label}: prbs_per_tti must be >= 1")
        if not self.power_weight > 0:
            raise ConfigMismatchError(f"band {self.label}: power_weight must be > 0")


@dataclass(frozen=True)
class CellConfig:
    """Ordered bands plus reallocation period (delta) and activation period (T), in ms"""
    bands: Tuple[BandConfig, ...]
    realloc_ms: int
    activation_ms: int

    def __post_init__(self):
        if not self.bands:
            raise ConfigMismatchError("cell has no bands")
        ids = [band.band_id for band in self.bands]
        if ids != list(range(1, len(self.bands) + 1)):
            raise ConfigMismatchError(f"band ids must be 1..F in order, got {ids}")
        labels = [band.label for band in self.bands]
        if len(set(labels)) != len(labels):
            raise ConfigMismatchError(f"duplicate band labels: {labels}")
        if self.realloc_ms < 1:
            raise ConfigMismatchError("realloc_ms must be >= 1")
        if self.activation_ms < 1 or self.activation_ms % self.realloc_ms != 0:
            raise ConfigMismatchError(
                f"activation_ms ({self.activation_ms}) must be a positive multiple "
                f"of realloc_ms ({self.realloc_ms})"
            )

    @property
    def n_bands(self) -> int:
        return len(self.bands)

    @property
    def capacities(self) -> List[int]:
        return [band.prbs_per_tti for band in self.bands]

    @property
    def total_capacity(self) -> int:
        """Sum of A_f: PRBs per TTI with every band on"""
        return sum(self.capacities)

    @property
    def windows_per_period(self) -> int:
        """I = T / delta"""
        return self.activation_ms // self.realloc_ms

    @property
    def labels(self) -> List[str]:
        return [band.label for band in self.bands]

    def band_index(self, label: str) -> int:
        """0-based index of a band label"""
        for index, band in enumerate(self.bands):
            if band.label == label:
                return index
        raise ConfigMismatchError(f"unknown band label '{label}' (cell has {self.labels})")


def cell_config_from_dict(data: Dict[str, Any]) -> CellConfig:
    """Build a CellConfig from the JSON document layout"""
    try:
        jsonschema.validate(instance=data, schema=BandSleepConfig.CELL_CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        raise ConfigMismatchError(f"invalid cell config: {e.message}")

    bands = tuple(
        BandConfig(
            band_id=index,
            label=band['label'],
            prbs_per_tti=int(band['prbs_per_tti']),
            power_weight=float(band['power_weight']),
        )
        for index, band in enumerate(data['bands'], 1)
    )
    return CellConfig(bands=bands, realloc_ms=int(data['realloc_ms']), activation_ms=int(data['activation_ms']))


def cell_config_to_dict(cell: CellConfig) -> Dict[str, Any]:
    return {
        'bands': [
            {'label': band.label, 'prbs_per_tti': band.prbs_per_tti, 'power_weight': band.power_weight}
            for band in cell.bands
        ],
        'realloc_ms': cell.realloc_ms,
        'activation_ms': cell.activation_ms,
    }


def load_cell_config(path: str) -> CellConfig:
    """Read and validate a cell config JSON file"""
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            data = json.load(handle)
    except json.JSONDecodeError as e:
        raise ConfigMismatchError(f"cell config {path} is not valid JSON: {e}")
    cell = cell_config_from_dict(data)
    logger.debug(f"Loaded cell config {path}: {cell.n_bands} bands, delta={cell.realloc_ms} ms, T={cell.activation_ms} ms")
    return cell


def default_cell_config() -> CellConfig:
    return cell_config_from_dict(BandSleepConfig.get_default_cell())


def make_cell(capacities: List[int], realloc_ms: int, activation_ms: int,
              power_weights: Optional[List[float]] = None) -> CellConfig:
    """Small helper for ad-hoc cells: labels are 'band1', 'band2', ..."""
    weights = power_weights or [1.0] * len(capacities)
    if len(weights) != len(capacities):
        raise ConfigMismatchError("power_weights and capacities differ in length")
    bands = tuple(
        BandConfig(band_id=index, label=f"band{index}", prbs_per_tti=int(capacity), power_weight=float(weight))
        for index, (capacity, weight) in enumerate(zip(capacities, weights), 1)
    )
    return CellConfig(bands=bands, realloc_ms=realloc_ms, activation_ms=activation_ms)


def with_activation_ms(cell: CellConfig, activation_ms: int) -> CellConfig:
    """Same cell, different activation period"""
    return replace(cell, activation_ms=activation_ms)
