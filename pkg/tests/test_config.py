"""
Test cell configuration loading and the pipeline defaults
"""

import json
import sys
import os

import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from config.bandsleep_config import BandSleepConfig
from config.cell_config import (
    cell_config_from_dict, cell_config_to_dict, default_cell_config, load_cell_config, make_cell,
    with_activation_ms,
)
from utils.errors import ConfigMismatchError

DATA_DIR = os.path.join(os.path.dirname(__file__), '..', 'data')


def test_default_cell():
    cell = default_cell_config()
    assert cell.labels == ['800MHz', '1800MHz', '2100MHz', '2600MHz']
    assert cell.capacities == [50, 100, 75, 75]
    assert cell.total_capacity == 300
    assert cell.windows_per_period == 30_000
    assert cell.band_index('2100MHz') == 2


def test_shipped_cell_file_matches_default():
    cell = load_cell_config(os.path.join(DATA_DIR, 'default_cell.json'))
    assert cell == default_cell_config()


def test_dict_layout():
    data = cell_config_to_dict(default_cell_config())
    assert data == BandSleepConfig.get_default_cell()
    assert cell_config_from_dict(data) == default_cell_config()


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(bands=[]),
    lambda d: d['bands'][0].update(prbs_per_tti=0),
    lambda d: d['bands'][1].update(power_weight=0),
    lambda d: d['bands'][1].update(label='800MHz'),
    lambda d: d.update(activation_ms=30),
    lambda d: d.pop('realloc_ms'),
])
def test_invalid_cell_documents(mutate):
    data = BandSleepConfig.get_default_cell()
    mutate(data)
    with pytest.raises(ConfigMismatchError):
        cell_config_from_dict(data)


def test_load_rejects_bad_json(tmp_path):
    path = tmp_path / 'cell.json'
    path.write_text('{"bands": [', encoding='utf-8')
    with pytest.raises(ConfigMismatchError):
        load_cell_config(str(path))


def test_load_custom_cell(tmp_path):
    path = tmp_path / 'cell.json'
    path.write_text(json.dumps({
        'bands': [{'label': 'low', 'prbs_per_tti': 6, 'power_weight': 1},
                  {'label': 'high', 'prbs_per_tti': 15, 'power_weight': 3}],
        'realloc_ms': 1,
        'activation_ms': 10,
    }), encoding='utf-8')
    cell = load_cell_config(str(path))
    assert cell.n_bands == 2
    assert cell.windows_per_period == 10
    with pytest.raises(ConfigMismatchError):
        cell.band_index('mid')


def test_make_cell_and_activation():
    cell = make_cell([4, 4], 1, 2, power_weights=[1.0, 2.0])
    assert cell.labels == ['band1', 'band2']
    assert with_activation_ms(cell, 6).windows_per_period == 6
    with pytest.raises(ConfigMismatchError):
        make_cell([4, 4], 1, 2, power_weights=[1.0])
    with pytest.raises(ConfigMismatchError):
        with_activation_ms(make_cell([4], 20, 20), 30)


def test_granularities():
    assert BandSleepConfig.get_granularity_ms('10m') == 600_000
    assert BandSleepConfig.get_granularity_ms('1h') == 3_600_000
    with pytest.raises(ConfigMismatchError):
        BandSleepConfig.get_granularity_ms('7m')
    assert BandSleepConfig.is_indicative('20ms')
    assert not BandSleepConfig.is_indicative('1m')


def test_hyperparam_presets():
    assert BandSleepConfig.get_hyperparam_preset('1h')['epochs'] == 150
    assert BandSleepConfig.get_hyperparam_preset('30m')['batch_size'] == 2
    assert BandSleepConfig.get_hyperparam_preset('1s') == BandSleepConfig.get_hyperparam_preset('1m')
    preset = BandSleepConfig.get_hyperparam_preset('10m')
    preset['epochs'] = 1
    assert BandSleepConfig.get_hyperparam_preset('10m')['epochs'] == 100


def test_seed_resolution(monkeypatch):
    monkeypatch.delenv('BANDSLEEP_SEED', raising=False)
    assert BandSleepConfig.get_seed() == 0
    assert BandSleepConfig.get_seed(5) == 5
    monkeypatch.setenv('BANDSLEEP_SEED', '42')
    assert BandSleepConfig.get_seed() == 42
    assert BandSleepConfig.get_seed(5) == 5
    monkeypatch.setenv('BANDSLEEP_SEED', 'many')
    with pytest.raises(ConfigMismatchError):
        BandSleepConfig.get_seed()
