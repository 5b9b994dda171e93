"""
Test FIFO reallocation simulation and sleep percentages
"""

import json
import sys
import os
from collections import Counter, deque

import numpy as np
import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from config.cell_config import default_cell_config, make_cell, with_activation_ms
from planning.band_planner import BandPlan, plan_reference
from planning.realloc_simulator import (
    HISTOGRAM_EXACT_MS, DelayReport, simulate, sleep_percentages, write_delay_report,
)
from traces.synthetic_generator import SynthParams, diurnal_fraction, generate_trace, pack_lowest_first
from traces.trace_aggregator import aggregate_theta, total_demand_per_tti
from traces.trace_model import DemandSeries, TraceSeries
from utils.errors import ContractViolationError


def step_by_step(demand, plan, cell, reset=False):
    """One TTI at a time FIFO service; returns (histogram, unserved PRBs)"""
    capacity_of = np.cumsum(cell.capacities)
    period = plan.activation_ms
    queue = deque()
    histogram = Counter()
    dropped = 0
    for tti, arrivals in enumerate(demand):
        if reset and tti % period == 0:
            dropped += sum(count for _, count in queue)
            queue.clear()
        if arrivals:
            queue.append([tti, arrivals])
        free = int(capacity_of[plan.counts[tti // period] - 1])
        while free and queue:
            taken = min(free, queue[0][1])
            histogram[tti - queue[0][0]] += taken
            free -= taken
            queue[0][1] -= taken
            if queue[0][1] == 0:
                queue.popleft()
    left = sum(count for _, count in queue)
    return {delay: count for delay, count in histogram.items() if count}, left + dropped


def nonzero(histogram):
    return {delay: count for delay, count in histogram.items() if count}


def test_two_band_example_second_window_delays_two_prbs():
    cell = make_cell([6, 12], 2, 2)
    trace = TraceSeries.from_rows(cell, [[6, 6], [6, 6], [6, 2], [4, 0]])
    plan = plan_reference(aggregate_theta(trace), cell)
    report = simulate(total_demand_per_tti(trace), plan, cell)
    assert nonzero(report.delay_histogram) == {0: 34, 1: 2}
    assert report.delayed_prbs == 2
    assert report.max_delay_ms == 1
    assert report.avg_extra_delay_us == pytest.approx(2000.0 / 36)
    assert report.residual_backlog == 0


def test_single_burst_drains_over_three_ttis():
    cell = make_cell([4, 4], 1, 3)
    report = simulate([10, 0, 0], BandPlan(3, (1,)), cell)
    assert nonzero(report.delay_histogram) == {0: 4, 1: 4, 2: 2}
    assert report.avg_extra_delay_us == pytest.approx(800.0)
    assert report.total_prbs == 10


def test_capacity_above_demand_means_no_delay():
    cell = default_cell_config()
    cell = with_activation_ms(cell, 20)
    rng = np.random.default_rng(0)
    demand = rng.integers(0, 300, size=200)
    report = simulate(demand.tolist(), BandPlan(20, (4,) * 10), cell)
    assert report.delayed_prbs == 0
    assert report.avg_extra_delay_us == 0.0
    assert report.max_delay_ms == 0


def test_residual_backlog_is_reported():
    cell = make_cell([4, 4], 1, 2)
    report = simulate([8, 8], BandPlan(2, (1,)), cell)
    assert report.residual_backlog == 8
    assert nonzero(report.delay_histogram) == {0: 4, 1: 4}


def test_backlog_carries_across_periods():
    cell = make_cell([4, 4], 1, 2)
    plan = BandPlan(2, (1, 2))
    report = simulate([8, 8, 0, 0], plan, cell)
    assert report.residual_backlog == 0
    # 4 served at tti 0, 4 + 4 at tti 1 / 2 ..., oldest first
    histogram, left = step_by_step([8, 8, 0, 0], plan, cell)
    assert nonzero(report.delay_histogram) == histogram
    assert left == 0


def test_reset_drops_backlog_at_period_start():
    cell = make_cell([4, 4], 1, 2)
    plan = BandPlan(2, (1, 2))
    report = simulate([8, 8, 0, 0], plan, cell, reset_backlog_each_period=True)
    assert report.residual_backlog == 8
    assert nonzero(report.delay_histogram) == {0: 4, 1: 4}


def test_matches_step_by_step_service():
    """Test 200 random demands and plans against one-TTI-at-a-time service"""
    rng = np.random.default_rng(7)
    for case in range(200):
        n_bands = int(rng.integers(1, 4))
        capacities = rng.integers(1, 9, size=n_bands).tolist()
        delta = int(rng.integers(1, 4))
        period = delta * int(rng.integers(1, 4))
        cell = make_cell(capacities, delta, period)
        n_periods = int(rng.integers(1, 6))
        # blocky demand exercises long runs and period cuts
        step = int(rng.integers(1, 4))
        per_step = rng.integers(0, sum(capacities) + 1, size=-(-n_periods * period // step))
        expanded = np.repeat(per_step, step)[:n_periods * period]
        plan = BandPlan(period, tuple(rng.integers(1, n_bands + 1, size=n_periods).tolist()))
        reset = bool(case % 2)

        report = simulate(expanded.tolist(), plan, cell, reset_backlog_each_period=reset)
        histogram, left = step_by_step(expanded.tolist(), plan, cell, reset)
        assert nonzero(report.delay_histogram) == histogram, f"case {case}"
        assert report.residual_backlog == left
        assert report.total_prbs == int(expanded.sum())


def test_block_demand_matches_expanded_demand():
    cell = make_cell([3, 5], 1, 12)
    per_step = [9, 1, 0, 8]
    plan = BandPlan(12, (1, 2))
    coarse = simulate(DemandSeries(per_step, step_ms=6), plan, cell)
    fine = simulate(np.repeat(per_step, 6).tolist(), plan, cell)
    assert coarse.to_dict() == fine.to_dict()


def test_work_conservation():
    cell = make_cell([5, 10], 1, 4)
    rng = np.random.default_rng(1)
    for _ in range(20):
        demand = rng.integers(0, 16, size=40).tolist()
        plan = BandPlan(4, tuple(rng.integers(1, 3, size=10).tolist()))
        report = simulate(demand, plan, cell)
        served = sum(report.delay_histogram.values())
        assert served + report.residual_backlog == sum(demand)


def burst_trace(seed, cell, n_windows=500):
    """Each window's PRBs sent as early as the cell allows: non-increasing inside every window"""
    rng = np.random.default_rng(seed)
    delta = cell.realloc_ms
    total = cell.total_capacity
    hours = rng.uniform(0.0, 24.0, size=n_windows)
    window_load = diurnal_fraction(hours, 0.5, 0.05) * rng.uniform(0.5, 1.5, size=n_windows)
    window_prbs = np.floor(window_load * total * delta).astype(np.int64)
    demand = np.clip(window_prbs[:, None] - total * np.arange(delta)[None, :], 0, total)
    return TraceSeries(cell, pack_lowest_first(demand.reshape(-1), cell.capacities))


def test_reference_plans_keep_delay_within_a_window():
    """Test that bursty windows served under their reference plan stay within delta - 1 ms"""
    cell = with_activation_ms(default_cell_config(), 1_000)
    worst = 0
    for seed in range(100):
        trace = burst_trace(seed, cell)
        plan = plan_reference(aggregate_theta(trace), cell)
        report = simulate(total_demand_per_tti(trace), plan, cell, reset_backlog_each_period=True)
        assert report.delayed_prbs > 0, f"seed {seed}"
        assert report.max_delay_ms <= cell.realloc_ms - 1, f"seed {seed}"
        assert report.residual_backlog == 0
        worst = max(worst, report.max_delay_ms)
    print(f"\n  worst delay over 100 traces: {worst} ms")


def test_single_window_periods_bound_delay():
    rng = np.random.default_rng(5)
    cell = make_cell([4, 6], 5, 5)
    for _ in range(50):
        rows = np.stack([rng.integers(0, 5, size=50), rng.integers(0, 7, size=50)], axis=1)
        trace = TraceSeries.from_rows(cell, rows)
        plan = plan_reference(aggregate_theta(trace), cell)
        report = simulate(total_demand_per_tti(trace), plan, cell, reset_backlog_each_period=True)
        assert report.max_delay_ms <= cell.realloc_ms - 1


def test_fewer_bands_never_reduce_delay():
    cell = make_cell([4, 8], 2, 4)
    rng = np.random.default_rng(9)
    for _ in range(20):
        rows = np.stack([rng.integers(0, 5, size=40), rng.integers(0, 9, size=40)], axis=1)
        trace = TraceSeries.from_rows(cell, rows)
        demand = total_demand_per_tti(trace)
        reference = plan_reference(aggregate_theta(trace), cell)
        reduced = BandPlan(4, (1,) * len(reference))
        assert simulate(demand, reduced, cell).avg_extra_delay_us >= simulate(demand, reference, cell).avg_extra_delay_us


def test_length_mismatch():
    cell = make_cell([4], 1, 2)
    with pytest.raises(ContractViolationError):
        simulate([1, 1, 1], BandPlan(2, (1,)), cell)


def test_plan_wider_than_cell():
    cell = make_cell([4], 1, 2)
    with pytest.raises(ContractViolationError):
        simulate([1, 1], BandPlan(2, (2,)), cell)


def test_sleep_percentages_examples():
    assert sleep_percentages(BandPlan(1, (1, 1, 2, 4)), 4) == [0.0, 50.0, 75.0, 75.0]
    assert sleep_percentages(BandPlan(1, (4, 4, 4)), 4) == [0.0, 0.0, 0.0, 0.0]
    assert sleep_percentages(BandPlan(1, (1, 1)), 4) == [0.0, 100.0, 100.0, 100.0]
    assert sleep_percentages(BandPlan(1, ()), 4) == [0.0, 0.0, 0.0, 0.0]


def test_delay_report_json(tmp_path):
    cell = make_cell([4, 4], 1, 3)
    report = simulate([10, 0, 0], BandPlan(3, (1,)), cell)
    path = tmp_path / 'delay.json'
    write_delay_report(report, str(path))
    with open(path, encoding='utf-8') as handle:
        data = json.load(handle)
    assert set(data) == {'sleep_pct', 'avg_extra_delay_us', 'total_prbs', 'delayed_prbs',
                         'max_delay_ms', 'histogram', 'residual_backlog'}
    assert data['sleep_pct'] == [0.0, 100.0]
    assert data['histogram'] == {'0': 4, '1': 4, '2': 2}
    assert DelayReport.from_dict(data).to_dict() == report.to_dict()


def bucket(delay):
    return delay if delay < HISTOGRAM_EXACT_MS else 1 << (delay.bit_length() - 1)


def test_long_delays_share_histogram_buckets():
    """Test exact totals and bucketed counts once delays pass the exact range"""
    cell = make_cell([4, 4], 1, 3000)
    demand = [10] * 3000
    report = simulate(demand, BandPlan(3000, (1,)), cell)
    histogram, left = step_by_step(demand, BandPlan(3000, (1,)), cell)

    expected = Counter()
    for delay, count in histogram.items():
        expected[bucket(delay)] += count
    assert nonzero(report.delay_histogram) == dict(expected)
    assert max(report.delay_histogram) < 2 * HISTOGRAM_EXACT_MS
    assert report.max_delay_ms == max(histogram)
    assert report.delayed_prbs == sum(count for delay, count in histogram.items() if delay >= 1)
    weighted = sum(delay * count for delay, count in histogram.items())
    assert report.avg_extra_delay_us == pytest.approx(1000.0 * weighted / sum(demand), rel=1e-12)
    assert report.residual_backlog == left


def test_sustained_underprovisioning_stays_bounded():
    """Test one band all day under synthetic peak traffic"""
    print("\n" + "="*60)
    print(" "*15 + "ONE-BAND DAY UNDER LOAD")
    print("="*60)

    cell = with_activation_ms(default_cell_config(), 3_600_000)
    trace = generate_trace(SynthParams(days=1, peak_load=0.6, trough_load=0.05, step_ms=60_000, seed=0), cell)
    demand = total_demand_per_tti(trace)
    report = simulate(demand, BandPlan(3_600_000, (1,) * 24), cell)
    print(f"  max delay {report.max_delay_ms} ms, residual {report.residual_backlog}, "
          f"{len(report.delay_histogram)} buckets")

    assert report.max_delay_ms > 3_600_000
    assert report.residual_backlog > 0
    assert len(report.delay_histogram) <= HISTOGRAM_EXACT_MS + 64
    assert sum(report.delay_histogram.values()) + report.residual_backlog == demand.total()
    assert report.delayed_prbs <= sum(report.delay_histogram.values())
    assert report.sleep_pct == [0.0, 100.0, 100.0, 100.0]


def test_sleep_percentages_weight_partial_tail():
    plan = BandPlan(10, (1, 4), partial_tail=True)
    assert sleep_percentages(plan, 4) == [0.0, 50.0, 50.0, 50.0]
    assert sleep_percentages(plan, 4, n_ttis=15) == pytest.approx([0.0, 200 / 3, 200 / 3, 200 / 3])
    with pytest.raises(ContractViolationError):
        sleep_percentages(plan, 4, n_ttis=25)

    cell = make_cell([4, 4, 4, 4], 1, 10)
    report = simulate([1] * 15, plan, cell)
    assert report.sleep_pct == pytest.approx([0.0, 200 / 3, 200 / 3, 200 / 3])
