#!/usr/bin/env python3
"""
bandsleep Demo Script
Demonstrates programmatic usage: plan a synthetic week, simulate it, train
a small predictor and compare its plan with the reference
"""

import sys
import os

sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from config.cell_config import default_cell_config, with_activation_ms
from evaluation.energy_model import preset_models
from evaluation.report_builder import ReportBuilder
from forecast.band_predictor import forecast_range
from forecast.lstm_network import Hyperparams
from forecast.lstm_trainer import make_windows, train
from planning.band_planner import plan_reference
from planning.realloc_simulator import simulate
from traces.synthetic_generator import SynthParams, generate_trace
from traces.trace_aggregator import aggregate_theta, total_demand_per_tti


def demo_programmatic_usage():
    """Demonstrate programmatic usage of the toolkit"""
    print("🚀 bandsleep Programmatic Demo")
    print("="*50)

    cell = with_activation_ms(default_cell_config(), 600_000)

    # Example 1: reference plan of a synthetic working week
    print("\n📊 Example 1: Reference plan (10 min activation period)")
    trace = generate_trace(SynthParams(days=7, peak_load=0.6, trough_load=0.05, burst_rate=2.0,
                                       burst_scale=1.5, seed=7), cell)
    week = trace.select_days([0, 1, 2, 3, 4])
    plan = plan_reference(aggregate_theta(week), cell)
    print(f"  - Periods planned: {len(plan)}")
    for n in range(1, cell.n_bands + 1):
        print(f"  - {n} band(s) on: {plan.counts.count(n)} periods")

    # Example 2: train on four days, predict the fifth
    print("\n📝 Example 2: Small LSTM predictor")
    per_day = len(plan) // 5
    hp = Hyperparams(learning_rate=0.005, epochs=30, hidden_size=16, num_layers=2, batch_size=16,
                     window_k=12, seed=7)
    result = train(make_windows(plan.sub_plan(0, 4 * per_day), hp.window_k, cell.n_bands), hp)
    predictions = forecast_range(result.model, plan, 4 * per_day, len(plan))
    print(f"  - Final training RMSE: {result.train_loss[-1]:.4f}")

    # Example 3: energy saving and extra delay of both plans on day five
    print("\n🔋 Example 3: Energy / delay report")
    reference = plan.sub_plan(4 * per_day, len(plan))
    demand = total_demand_per_tti(week.select_days([4]))
    delay_ref = simulate(demand, reference, cell)
    delay_pred = simulate(demand, predictions.as_plan(cell.activation_ms), cell)
    report = ReportBuilder(preset_models(cell)).build_report(reference, predictions, delay_ref, delay_pred)
    print(f"  - Accuracy: {report['metrics']['accuracy']:.2%}")
    print(f"  - QoS preservation: {report['metrics']['qos_preservation']:.2%}")
    for plan_name in ('reference', 'predicted'):
        rho = report['energy'][plan_name]['rho']
        delay = report['delay'][plan_name]['avg_extra_delay_us']
        print(f"  - {plan_name}: rho {rho['model1']:.4f} / {rho['model2']:.4f}, avg extra delay {delay:.3f} us")

    print("\n✅ Demo completed successfully!")
    print("\n💡 For the full pipeline, run: python bandsleep_cli.py report")


if __name__ == "__main__":
    demo_programmatic_usage()
