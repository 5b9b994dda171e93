"""
Generate the sample two-week trace
Writes data/sample_trace.csv (compact form) for the default cell
"""

import sys
import os

sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'src'))

from config.bandsleep_config import BandSleepConfig
from config.cell_config import load_cell_config
from traces.synthetic_generator import SynthParams, generate_trace
from traces.trace_aggregator import total_demand_per_tti
from traces.trace_reader import write_trace

DATA_DIR = os.path.dirname(os.path.abspath(__file__))


def main():
    print("\n" + "="*60)
    print(" "*15 + "SAMPLE TRACE GENERATOR")
    print("="*60)

    cell = load_cell_config(os.path.join(DATA_DIR, 'default_cell.json'))
    print(f"\n📡 Cell: {', '.join(cell.labels)} ({cell.total_capacity} PRBs per TTI)")

    defaults = BandSleepConfig.get_synth_defaults()
    params = SynthParams(seed=BandSleepConfig.get_seed(), **defaults)

    print(f"\n🔄 Generating {params.days} days of traffic (seed={params.seed})...")
    trace = generate_trace(params, cell)
    demand = total_demand_per_tti(trace)
    print(f"✓ {trace.n_days} days, {demand.total():,} PRBs, peak {demand.max()} PRBs per TTI")

    out_path = os.path.join(DATA_DIR, 'sample_trace.csv')
    write_trace(trace, out_path, compact=True)
    print(f"✓ Wrote {out_path}")

    print("\n" + "="*60)
    print("✓ SAMPLE TRACE READY")
    print("="*60)


if __name__ == "__main__":
    main()
