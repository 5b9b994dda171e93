"""
Energy Model
Relative power weights per band and the weighted energy saving of a plan
"""

import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.cell_config import CellConfig
from utils.errors import ContractViolationError


@dataclass(frozen=True)
class EnergyModel:
    """Named vector of relative band powers P_f"""
    name: str
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, 'weights', tuple(float(w) for w in self.weights))
        if not self.weights or any(w <= 0 for w in self.weights):
            raise ContractViolationError(f"energy model '{self.name}' needs positive weights")


@dataclass
class EnergyReport:
    beta: List[float]
    rho_per_model: Dict[str, float] = field(default_factory=dict)

    @property
    def relative_consumption(self) -> Dict[str, float]:
        """1 - rho: consumption with sleeping bands relative to all bands on"""
        return {name: 1.0 - rho for name, rho in self.rho_per_model.items()}

    def to_dict(self) -> Dict[str, object]:
        return {
            'beta': [float(b) for b in self.beta],
            'rho': dict(self.rho_per_model),
            'relative_consumption': self.relative_consumption,
        }


def uniform_model(n_bands: int) -> EnergyModel:
    return EnergyModel('model1', (1.0,) * n_bands)


def preset_models(cell: CellConfig) -> List[EnergyModel]:
    """model1: equal power per band; model2: the cell's configured power weights"""
    return [
        uniform_model(cell.n_bands),
        EnergyModel('model2', tuple(band.power_weight for band in cell.bands)),
    ]


def energy_saving(beta: Sequence[float], model: EnergyModel) -> float:
    """rho = sum(beta_f * P_f) / sum(P_f)"""
    beta = np.asarray(beta, dtype=np.float64)
    weights = np.asarray(model.weights, dtype=np.float64)
    if beta.shape != weights.shape:
        raise ContractViolationError(
            f"{beta.size} sleep fractions against {weights.size} weights of '{model.name}'"
        )
    if np.any(beta < 0) or np.any(beta > 1):
        raise ContractViolationError("sleep fractions must lie in [0, 1]")
    return float(np.dot(beta, weights) / weights.sum())


def beta_from_sleep_pct(sleep_pct: Sequence[float]) -> List[float]:
    return [float(p) / 100.0 for p in sleep_pct]


def energy_report(beta: Sequence[float], models: Sequence[EnergyModel]) -> EnergyReport:
    return EnergyReport(
        beta=[float(b) for b in beta],
        rho_per_model={model.name: energy_saving(beta, model) for model in models},
    )
