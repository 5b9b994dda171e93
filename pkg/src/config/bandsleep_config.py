"""
bandsleep Configuration
Defaults for the cell, activation-period granularities, training presets,
energy models and the calendar used to partition traces into days
"""

import os
from typing import Dict, Any, List, Optional

from dotenv import load_dotenv

import sys
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from utils.errors import ConfigMismatchError

# Load environment variables
load_dotenv()

MS_PER_DAY = 86_400_000


class BandSleepConfig:
    """Configuration class for the planning / forecasting pipeline"""

    VERSION = '1.0.0'

    # Default 4-band cell; PRBs per TTI follow the LTE bandwidth table
    # (10 MHz -> 50, 20 MHz -> 100, 15 MHz -> 75)
    DEFAULT_CELL = {
        'bands': [
            {'label': '800MHz', 'prbs_per_tti': 50, 'power_weight': 1.0},
            {'label': '1800MHz', 'prbs_per_tti': 100, 'power_weight': 2.0},
            {'label': '2100MHz', 'prbs_per_tti': 75, 'power_weight': 1.5},
            {'label': '2600MHz', 'prbs_per_tti': 75, 'power_weight': 1.5},
        ],
        'realloc_ms': 20,
        'activation_ms': 600_000,
    }

    # Activation period name -> duration in ms
    GRANULARITIES = {
        '20ms': 20,
        '1s': 1_000,
        '1m': 60_000,
        '3m': 180_000,
        '10m': 600_000,
        '30m': 1_800_000,
        '1h': 3_600_000,
    }

    # Shorter than the 80 ms SIB period or the band switching time
    INDICATIVE_GRANULARITIES = ('20ms', '1s')

    SWEEP_GRANULARITIES = ('1m', '3m', '10m', '30m', '1h')

    # Training hyperparameters per activation period
    HYPERPARAM_PRESETS = {
        '1m': {'learning_rate': 1e-4, 'epochs': 100, 'hidden_size': 256, 'num_layers': 6, 'batch_size': 72},
        '3m': {'learning_rate': 1e-4, 'epochs': 100, 'hidden_size': 256, 'num_layers': 6, 'batch_size': 16},
        '10m': {'learning_rate': 1e-4, 'epochs': 100, 'hidden_size': 256, 'num_layers': 6, 'batch_size': 16},
        '30m': {'learning_rate': 1e-4, 'epochs': 100, 'hidden_size': 256, 'num_layers': 6, 'batch_size': 2},
        '1h': {'learning_rate': 1e-4, 'epochs': 150, 'hidden_size': 256, 'num_layers': 6, 'batch_size': 2},
    }

    TRAINING_DEFAULTS = {
        'window_k': 12,
        'val_split': 0.2,
        'seed': 0,
    }

    # Calendar: day 0 of every trace is a Monday; ranges index working days
    CALENDAR = {
        'start_date': '2023-02-20',
        'include_weekends': False,
        'train_range': (0, 5),
        'test_range': (5, 7),
    }

    SYNTH_DEFAULTS = {
        'days': 14,
        'peak_load': 0.6,
        'trough_load': 0.05,
        'burst_rate': 2.0,
        'burst_scale': 1.5,
        'weekend_factor': 0.6,
        'step_ms': 1_000,
    }

    CELL_CONFIG_SCHEMA = {
        'type': 'object',
        'required': ['bands', 'realloc_ms', 'activation_ms'],
        'properties': {
            'bands': {
                'type': 'array',
                'minItems': 1,
                'items': {
                    'type': 'object',
                    'required': ['label', 'prbs_per_tti', 'power_weight'],
                    'properties': {
                        'label': {'type': 'string', 'minLength': 1},
                        'prbs_per_tti': {'type': 'integer', 'minimum': 1},
                        'power_weight': {'type': 'number', 'exclusiveMinimum': 0},
                    },
                },
            },
            'realloc_ms': {'type': 'integer', 'minimum': 1},
            'activation_ms': {'type': 'integer', 'minimum': 1},
        },
    }

    CHECKPOINT_SCHEMA = {
        'type': 'object',
        'required': ['format', 'version', 'hyperparams', 'n_bands', 'norm', 'layers', 'head'],
        'properties': {
            'format': {'const': 'bandsleep-lstm'},
            'version': {'const': 1},
            'n_bands': {'type': 'integer', 'minimum': 1},
            'hyperparams': {'type': 'object'},
            'norm': {
                'type': 'object',
                'required': ['offset', 'scale'],
            },
            'layers': {
                'type': 'array',
                'minItems': 1,
                'items': {'type': 'object', 'required': ['W', 'b']},
            },
            'head': {'type': 'object', 'required': ['w', 'b']},
        },
    }

    @staticmethod
    def get_default_cell() -> Dict[str, Any]:
        cell = BandSleepConfig.DEFAULT_CELL
        return {
            'bands': [dict(band) for band in cell['bands']],
            'realloc_ms': cell['realloc_ms'],
            'activation_ms': cell['activation_ms'],
        }

    @staticmethod
    def get_granularity_ms(name: str) -> int:
        """Activation period in ms for a granularity name such as '10m'"""
        try:
            return BandSleepConfig.GRANULARITIES[name]
        except KeyError:
            choices = ', '.join(BandSleepConfig.GRANULARITIES)
            raise ConfigMismatchError(f"unknown granularity '{name}' (expected one of {choices})")

    @staticmethod
    def is_indicative(name: str) -> bool:
        return name in BandSleepConfig.INDICATIVE_GRANULARITIES

    @staticmethod
    def get_hyperparam_preset(name: str) -> Dict[str, Any]:
        """Training preset for a granularity; sub-minute periods reuse the 1 min column"""
        BandSleepConfig.get_granularity_ms(name)
        preset = BandSleepConfig.HYPERPARAM_PRESETS.get(name, BandSleepConfig.HYPERPARAM_PRESETS['1m'])
        return dict(preset)

    @staticmethod
    def get_training_defaults() -> Dict[str, Any]:
        return BandSleepConfig.TRAINING_DEFAULTS.copy()

    @staticmethod
    def get_calendar() -> Dict[str, Any]:
        return BandSleepConfig.CALENDAR.copy()

    @staticmethod
    def get_synth_defaults() -> Dict[str, Any]:
        return BandSleepConfig.SYNTH_DEFAULTS.copy()

    @staticmethod
    def get_seed(explicit: Optional[int] = None) -> int:
        """Explicit seed, else BANDSLEEP_SEED, else the training default"""
        if explicit is not None:
            return int(explicit)
        env_seed = os.getenv('BANDSLEEP_SEED')
        if env_seed:
            try:
                return int(env_seed)
            except ValueError:
                raise ConfigMismatchError(f"BANDSLEEP_SEED is not an integer: {env_seed!r}")
        return BandSleepConfig.TRAINING_DEFAULTS['seed']

    @staticmethod
    def sweep_granularities() -> List[str]:
        return list(BandSleepConfig.SWEEP_GRANULARITIES)
