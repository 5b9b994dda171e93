"""
Test the file-based pipeline and the granularity sweep
"""

import json
import sys
import os

import pandas as pd
import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from pipeline.pipeline_runner import (
    PipelineRunner, RunConfig, partition_days, plan_for_days, run_pipeline, run_sweep, select_working_days,
    sha256_of, working_days,
)
from planning.band_planner import BandPlan
from utils.errors import ConfigMismatchError, StageError

TINY_NETWORK = {'epochs': 2, 'hidden_size': 4, 'num_layers': 1, 'batch_size': 32}


def small_config(output_dir, days=9, **kwargs):
    """Nine synthetic days (Monday to Tuesday) in one-minute blocks, hourly plan"""
    settings = dict(
        output_dir=str(output_dir),
        seed=3,
        granularity='1h',
        overrides=dict(TINY_NETWORK),
        window_k=4,
        synth={'days': days, 'step_ms': 60_000},
    )
    settings.update(kwargs)
    return RunConfig(**settings)


def test_working_days_skip_weekends():
    assert working_days(9, '2023-02-20', False) == [0, 1, 2, 3, 4, 7, 8]
    assert working_days(3, '2023-02-20', True) == [0, 1, 2]


def test_partition_days():
    train_days, test_days = partition_days(14, RunConfig())
    assert train_days == [0, 1, 2, 3, 4]
    assert test_days == [7, 8]
    with pytest.raises(ConfigMismatchError):
        partition_days(6, RunConfig())


def test_full_run_writes_every_artifact(tmp_path):
    print("\n" + "="*60)
    print(" "*20 + "PIPELINE RUN TEST")
    print("="*60)

    result = run_pipeline(small_config(tmp_path))
    names = sorted(os.listdir(tmp_path))
    print(f"  artifacts: {names}")
    for name in ('trace.csv', 'plan.csv', 'delay_reference.json', 'model.json', 'loss.csv',
                 'predictions.csv', 'delay_predicted.json', 'delay_reference_train.json', 'report.json',
                 'report.csv', 'manifest.json', 'energy_saving.dat', 'energy_vs_delay.dat'):
        assert name in names
    assert not [name for name in names if name.endswith('.partial')]

    assert len(pd.read_csv(tmp_path / 'plan.csv')) == 7 * 24
    assert len(pd.read_csv(tmp_path / 'predictions.csv')) == 2 * 24
    assert len(pd.read_csv(tmp_path / 'loss.csv')) == 2

    report = result.report
    assert report['granularity'] == '1h'
    assert report['n_periods'] == 48
    for name in ('model1', 'model2'):
        rho = report['energy']['reference']['rho'][name]
        assert 0.0 < rho < 1.0
    assert report['energy']['reference']['beta'][0] == 0.0
    assert report['reference_train']['n_periods'] == 5 * 24
    assert report['reference_train']['sleep_pct'][0] == 0.0
    assert set(report['baseline_persistence']) >= {'rmse', 'accuracy', 'qos_preservation'}


def test_manifest_contents(tmp_path):
    run_pipeline(small_config(tmp_path))
    with open(tmp_path / 'manifest.json', encoding='utf-8') as handle:
        manifest = json.load(handle)
    assert manifest['seed'] == 3
    assert manifest['partition'] == {'train_days': [0, 1, 2, 3, 4], 'test_days': [7, 8]}
    assert 'output_dir' not in manifest['config']
    assert manifest['config']['hyperparams']['hidden_size'] == 4
    assert 'model.json' in manifest['artifacts']
    assert len(manifest['config_sha256']) == 64


def test_same_seed_same_bytes(tmp_path):
    first = run_pipeline(small_config(tmp_path / 'a', days=14))
    second = run_pipeline(small_config(tmp_path / 'b', days=14))
    for name in ('trace.csv', 'plan.csv', 'model.json', 'predictions.csv', 'report.json', 'manifest.json'):
        with open(os.path.join(first.output_dir, name), 'rb') as a, \
                open(os.path.join(second.output_dir, name), 'rb') as b:
            assert a.read() == b.read(), name


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv('BANDSLEEP_SEED', '17')
    config = small_config(tmp_path, seed=None, stages=('plan',))
    run_pipeline(config)
    with open(tmp_path / 'manifest.json', encoding='utf-8') as handle:
        assert json.load(handle)['seed'] == 17


def test_stages_can_run_separately(tmp_path):
    run_pipeline(small_config(tmp_path, stages=('plan', 'simulate', 'train')))
    assert not os.path.exists(tmp_path / 'predictions.csv')
    result = run_pipeline(small_config(tmp_path, stages=('predict', 'evaluate', 'report')))
    assert result.report['n_periods'] == 48


def test_short_trace_fails_in_trace_stage(tmp_path):
    with pytest.raises(StageError) as excinfo:
        run_pipeline(small_config(tmp_path, days=3))
    assert excinfo.value.stage == 'trace'
    assert isinstance(excinfo.value.cause, ConfigMismatchError)


def test_missing_checkpoint_fails_in_predict_stage(tmp_path):
    with pytest.raises(StageError) as excinfo:
        run_pipeline(small_config(tmp_path, stages=('predict',)))
    assert excinfo.value.stage == 'predict'
    assert not os.path.exists(tmp_path / 'predictions.csv')


def test_invalid_configuration():
    with pytest.raises(ConfigMismatchError):
        PipelineRunner(RunConfig(stages=('plan', 'deploy')))
    with pytest.raises(ConfigMismatchError):
        PipelineRunner(RunConfig(granularity='7m'))
    with pytest.raises(ConfigMismatchError):
        PipelineRunner(RunConfig(train_range=(0, 5), test_range=(3, 6)))
    with pytest.raises(ConfigMismatchError):
        PipelineRunner(RunConfig(overrides={'dropout': 0.5}))


def test_sweep_rows_per_granularity(tmp_path):
    granularities = ['1m', '3m', '10m', '30m', '1h']
    rows = run_sweep(small_config(tmp_path), granularities)
    assert [row['granularity'] for row in rows] == granularities
    for row in rows:
        assert row['sleep_band1_pct'] == 0.0
        assert 0.0 < row['rho_ref_model1'] < 1.0
        assert 0.0 < row['rho_ref_model2'] < 1.0
        assert row['train_sleep_band1_pct'] == 0.0
        assert row['avg_delay_us_ref_train'] is not None

    by_name = {row['granularity']: row for row in rows}
    for finer, coarser in (('1m', '3m'), ('3m', '30m'), ('10m', '30m'), ('30m', '1h')):
        for band in range(2, 5):
            key = f'sleep_band{band}_pct'
            assert by_name[coarser][key] <= by_name[finer][key] + 1e-9

    assert len(pd.read_csv(tmp_path / 'sweep.csv')) == 5
    assert os.path.exists(tmp_path / 'energy_saving.dat')
    assert os.path.exists(tmp_path / 'energy_vs_delay.dat')
    for granularity in granularities:
        assert os.path.exists(tmp_path / granularity / 'report.json')


def test_select_working_days():
    assert select_working_days(9, (5, 7), '2023-02-20', False) == [7, 8]
    assert select_working_days(9, (5, 7), '2023-02-20', True) == [5, 6]
    with pytest.raises(ConfigMismatchError):
        select_working_days(9, (5, 8), '2023-02-20', False)


def test_plan_for_days_concatenates_whole_days():
    plan = BandPlan(3_600_000, tuple(day % 4 + 1 for day in range(5) for _ in range(3)))
    selected = plan_for_days(plan, [0, 3, 4], 3)
    assert selected.counts == (1, 1, 1, 4, 4, 4, 1, 1, 1)
    assert selected.activation_ms == plan.activation_ms
    assert len(plan_for_days(plan, [], 3)) == 0
    with pytest.raises(ConfigMismatchError):
        plan_for_days(plan, [5], 3)


def test_changed_seed_regenerates_trace(tmp_path):
    """Test that a second run with another seed in the same directory does not keep the old trace"""
    print("\n" + "="*60)
    print(" "*18 + "TRACE REGENERATION TEST")
    print("="*60)

    trace_path = tmp_path / 'trace.csv'
    run_pipeline(small_config(tmp_path, seed=1, stages=('plan',)))
    first = trace_path.read_bytes()

    run_pipeline(small_config(tmp_path, seed=2, stages=('plan',)))
    second = trace_path.read_bytes()
    assert first != second
    with open(tmp_path / 'manifest.json', encoding='utf-8') as handle:
        manifest = json.load(handle)
    assert manifest['seed'] == 2
    assert manifest['artifacts']['trace.csv'] == sha256_of(str(trace_path))
    assert len(manifest['trace_synth_sha256']) == 64

    # same settings again: the trace is reused untouched
    stamp = os.stat(trace_path).st_mtime_ns
    run_pipeline(small_config(tmp_path, seed=2, stages=('plan',)))
    assert os.stat(trace_path).st_mtime_ns == stamp
    assert trace_path.read_bytes() == second


def test_changed_synth_settings_regenerate_trace(tmp_path):
    run_pipeline(small_config(tmp_path, stages=('plan',)))
    before = (tmp_path / 'trace.csv').read_bytes()
    run_pipeline(small_config(tmp_path, stages=('plan',),
                              synth={'days': 9, 'step_ms': 60_000, 'peak_load': 0.5}))
    assert (tmp_path / 'trace.csv').read_bytes() != before
