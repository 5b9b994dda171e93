#!/usr/bin/env python3
"""
bandsleep
Command-line interface for multi-band sleep planning: synthesize traffic,
plan and simulate band activations, train the LSTM predictor and report
energy savings
"""

import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

sys.path.append(os.path.join(os.path.dirname(__file__), 'src'))

from config.bandsleep_config import MS_PER_DAY, BandSleepConfig
from config.cell_config import CellConfig, default_cell_config, load_cell_config, with_activation_ms
from evaluation.energy_model import preset_models
from evaluation.report_builder import ReportBuilder
from forecast.band_predictor import (
    PredictionSeries, baseline_persistence_range, forecast_range, load_checkpoint, save_checkpoint,
)
from forecast.lstm_network import Hyperparams
from forecast.lstm_trainer import make_windows, train
from pipeline.pipeline_runner import (
    HYPERPARAM_KEYS, STAGES, RunConfig, plan_for_days, run_pipeline, run_sweep, select_working_days, working_days,
)
from planning.band_planner import BandPlan, plan_reference, read_plan_csv, write_plan_csv
from planning.realloc_simulator import DelayReport, simulate
from traces.synthetic_generator import SynthParams, generate_trace
from traces.trace_aggregator import aggregate_theta, total_demand_per_tti
from traces.trace_reader import parse_trace, write_trace
from utils.errors import BandSleepError, StageError
from utils.logger import setup_logger

logger = setup_logger('bandsleep')

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INTERRUPTED = 130


def day_range(text: str) -> Tuple[int, int]:
    """Parse 'a:b' into a half-open day index range"""
    try:
        lo, hi = (int(part) for part in text.split(':'))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a range like 0:5, got {text!r}")
    if not 0 <= lo < hi:
        raise argparse.ArgumentTypeError(f"empty or negative range {text!r}")
    return lo, hi


class BandSleepInterface:
    """Subcommand dispatcher; rich output goes to stderr so stdout can carry CSV"""

    def __init__(self):
        self.console = Console(stderr=True)
        self.parser = self.build_parser()

    # argument parsing

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog='bandsleep',
            description='Plan, predict and evaluate frequency-band sleep schedules for an LTE cell',
        )
        sub = parser.add_subparsers(dest='command', required=True)
        granularities = list(BandSleepConfig.GRANULARITIES)

        synth = sub.add_parser('synth', help='generate a synthetic multi-band trace')
        self._add_cell(synth)
        defaults = BandSleepConfig.get_synth_defaults()
        synth.add_argument('--days', type=int, default=defaults['days'])
        synth.add_argument('--seed', type=int, default=None, help='defaults to BANDSLEEP_SEED')
        synth.add_argument('--peak-load', type=float, default=defaults['peak_load'])
        synth.add_argument('--trough-load', type=float, default=defaults['trough_load'])
        synth.add_argument('--burst-rate', type=float, default=defaults['burst_rate'])
        synth.add_argument('--burst-scale', type=float, default=defaults['burst_scale'])
        synth.add_argument('--weekend-factor', type=float, default=defaults['weekend_factor'])
        synth.add_argument('--start-date', default=BandSleepConfig.CALENDAR['start_date'])
        synth.add_argument('--step-ms', type=int, default=defaults['step_ms'],
                           help='length of the constant-demand blocks')
        synth.add_argument('--per-tti', action='store_true', help='one row per TTI and band')
        synth.add_argument('--out', default='-')

        plan = sub.add_parser('plan', help='reference band plan from a trace')
        self._add_cell(plan)
        plan.add_argument('--trace', default='-')
        plan.add_argument('--granularity', choices=granularities, default='10m')
        plan.add_argument('--out', default='-')

        sim = sub.add_parser('simulate', help='extra delay of a plan on a trace')
        self._add_cell(sim)
        sim.add_argument('--trace', required=True)
        sim.add_argument('--plan', default='-')
        sim.add_argument('--granularity', choices=granularities, default='10m')
        sim.add_argument('--reset-backlog', action='store_true',
                         help='drop the backlog at every activation boundary')
        sim.add_argument('--out', default='-')

        trn = sub.add_parser('train', help='train the LSTM predictor on a plan')
        self._add_cell(trn)
        trn.add_argument('--plan', default='-')
        trn.add_argument('--granularity', choices=granularities, default='10m')
        trn.add_argument('--train-range', type=day_range, default=BandSleepConfig.CALENDAR['train_range'],
                         help='working-day indices of the training days')
        self._add_calendar(trn)
        self._add_training(trn)
        trn.add_argument('--out', required=True, help='checkpoint path')
        trn.add_argument('--loss-out', default=None, help='optional per-epoch loss CSV')

        pred = sub.add_parser('predict', help='one-step-ahead forecasts over the test days')
        pred.add_argument('--plan', default='-')
        pred.add_argument('--model', default=None, help='checkpoint; omitted means persistence baseline')
        pred.add_argument('--granularity', choices=granularities, default='10m')
        pred.add_argument('--test-range', type=day_range, default=BandSleepConfig.CALENDAR['test_range'],
                          help='working-day indices of the forecast days')
        self._add_calendar(pred)
        pred.add_argument('--out', default='-')

        ev = sub.add_parser('evaluate', help='compare predicted and reference plans')
        self._add_cell(ev)
        ev.add_argument('--reference', required=True, help='reference plan CSV over the test periods')
        ev.add_argument('--predictions', required=True)
        ev.add_argument('--trace', default=None, help='trace of the test periods, enables delay figures')
        ev.add_argument('--granularity', choices=granularities, default='10m')
        ev.add_argument('--out', default='-')
        ev.add_argument('--csv', default=None, help='optional one-row CSV summary')

        for name, help_text in (('report', 'run the whole pipeline for one granularity'),
                                ('sweep', 'run the whole pipeline for every sweep granularity')):
            cmd = sub.add_parser(name, help=help_text)
            self._add_cell(cmd)
            cmd.add_argument('--trace', default=None, help='omitted means a synthetic trace')
            if name == 'report':
                cmd.add_argument('--granularity', choices=granularities, default='10m')
                cmd.add_argument('--stages', default=','.join(STAGES))
            else:
                cmd.add_argument('--granularities', default=','.join(BandSleepConfig.sweep_granularities()))
            cmd.add_argument('--output-dir', default='output')
            cmd.add_argument('--days', type=int, default=None, help='synthetic trace length')
            cmd.add_argument('--step-ms', type=int, default=None, help='synthetic demand block length')
            self._add_calendar(cmd)
            cmd.add_argument('--train-range', type=day_range, default=BandSleepConfig.CALENDAR['train_range'])
            cmd.add_argument('--test-range', type=day_range, default=BandSleepConfig.CALENDAR['test_range'])
            self._add_training(cmd)

        return parser

    @staticmethod
    def _add_cell(parser: argparse.ArgumentParser):
        parser.add_argument('--cell', default=None, help='cell config JSON (default: built-in 4-band cell)')

    @staticmethod
    def _add_calendar(parser: argparse.ArgumentParser):
        calendar = BandSleepConfig.get_calendar()
        parser.add_argument('--start-date', default=calendar['start_date'], help='date of trace day 0')
        parser.add_argument('--include-weekends', action='store_true',
                            help='count Saturdays and Sundays as usable days')

    @staticmethod
    def _add_training(parser: argparse.ArgumentParser):
        training = BandSleepConfig.get_training_defaults()
        parser.add_argument('--seed', type=int, default=None, help='defaults to BANDSLEEP_SEED')
        parser.add_argument('--window-k', type=int, default=training['window_k'])
        parser.add_argument('--val-split', type=float, default=training['val_split'])
        parser.add_argument('--epochs', type=int, default=None)
        parser.add_argument('--learning-rate', type=float, default=None)
        parser.add_argument('--hidden-size', type=int, default=None)
        parser.add_argument('--num-layers', type=int, default=None)
        parser.add_argument('--batch-size', type=int, default=None)

    # helpers

    @staticmethod
    def _cell(args, granularity: Optional[str] = None) -> CellConfig:
        cell = load_cell_config(args.cell) if args.cell else default_cell_config()
        if granularity is not None:
            cell = with_activation_ms(cell, BandSleepConfig.get_granularity_ms(granularity))
        return cell

    @staticmethod
    def _overrides(args) -> Dict[str, Any]:
        return {key: getattr(args, key) for key in HYPERPARAM_KEYS if getattr(args, key) is not None}

    def _hyperparams(self, args) -> Hyperparams:
        preset = BandSleepConfig.get_hyperparam_preset(args.granularity)
        preset.update(self._overrides(args))
        return Hyperparams(window_k=args.window_k, seed=BandSleepConfig.get_seed(args.seed), **preset)

    @staticmethod
    def _periods_per_day(granularity: str) -> int:
        return MS_PER_DAY // BandSleepConfig.get_granularity_ms(granularity)

    @staticmethod
    def _emit_json(data: Any, path: str):
        text = json.dumps(data, indent=2, sort_keys=True) + '\n'
        if path == '-':
            sys.stdout.write(text)
        else:
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write(text)

    @staticmethod
    def _read_predictions(path: str) -> PredictionSeries:
        frame = pd.read_csv(sys.stdin if path == '-' else path)
        raw = frame['raw'] if 'raw' in frame.columns else frame['n_bands']
        return PredictionSeries(tuple(int(v) for v in frame['n_bands']), tuple(float(v) for v in raw))

    @staticmethod
    def _write_predictions(predictions: PredictionSeries, path: str):
        frame = pd.DataFrame({
            'period_index': range(len(predictions)),
            'n_bands': list(predictions.counts),
            'raw': list(predictions.raw),
        })
        frame.to_csv(sys.stdout if path == '-' else path, index=False, lineterminator='\n')

    # commands

    def cmd_synth(self, args) -> int:
        cell = self._cell(args)
        params = SynthParams(
            days=args.days,
            peak_load=args.peak_load,
            trough_load=args.trough_load,
            burst_rate=args.burst_rate,
            burst_scale=args.burst_scale,
            seed=BandSleepConfig.get_seed(args.seed),
            weekend_factor=args.weekend_factor,
            start_date=args.start_date,
            step_ms=args.step_ms,
        )
        trace = generate_trace(params, cell)
        write_trace(trace, args.out, compact=not args.per_tti)
        return EXIT_OK

    def cmd_plan(self, args) -> int:
        if BandSleepConfig.is_indicative(args.granularity):
            self.console.print(f"[yellow]⚠️  {args.granularity} is indicative only[/yellow]")
        cell = self._cell(args, args.granularity)
        trace = parse_trace(args.trace, cell)
        plan = plan_reference(aggregate_theta(trace), cell)
        write_plan_csv(plan, args.out)
        self._show_plan(plan, cell)
        return EXIT_OK

    def cmd_simulate(self, args) -> int:
        cell = self._cell(args, args.granularity)
        trace = parse_trace(args.trace, cell)
        plan = read_plan_csv(args.plan, cell.activation_ms)
        report = simulate(total_demand_per_tti(trace), plan, cell,
                          reset_backlog_each_period=args.reset_backlog)
        self._emit_json(report.to_dict(), args.out)
        self._show_delay(report, cell)
        return EXIT_OK

    def cmd_train(self, args) -> int:
        cell = self._cell(args, args.granularity)
        hp = self._hyperparams(args)
        per_day = self._periods_per_day(args.granularity)
        plan = read_plan_csv(args.plan, cell.activation_ms)
        days = select_working_days(len(plan) // per_day, tuple(args.train_range), args.start_date,
                                   args.include_weekends)
        train_plan = plan_for_days(plan, days, per_day)
        dataset = make_windows(train_plan, hp.window_k, cell.n_bands)
        result = train(dataset, hp, val_split=args.val_split)
        save_checkpoint(result.model, args.out)
        if args.loss_out:
            pd.DataFrame({
                'epoch': range(1, len(result.train_loss) + 1),
                'train_loss': result.train_loss,
            }).to_csv(args.loss_out, index=False, lineterminator='\n')
        if result.train_loss:
            self.console.print(f"[green]✓ Final training RMSE {result.train_loss[-1]:.4f}[/green]")
        return EXIT_OK

    def cmd_predict(self, args) -> int:
        per_day = self._periods_per_day(args.granularity)
        plan = read_plan_csv(args.plan, BandSleepConfig.get_granularity_ms(args.granularity))
        n_days = len(plan) // per_day
        lo, hi = args.test_range
        select_working_days(n_days, (lo, hi), args.start_date, args.include_weekends)
        # working days 0..hi-1 back to back, so history before a test day skips weekends
        history = plan_for_days(plan, working_days(n_days, args.start_date, args.include_weekends)[:hi], per_day)
        start, end = lo * per_day, len(history)
        if args.model:
            predictions = forecast_range(load_checkpoint(args.model), history, start, end)
        else:
            predictions = baseline_persistence_range(history, start, end)
        self._write_predictions(predictions, args.out)
        return EXIT_OK

    def cmd_evaluate(self, args) -> int:
        cell = self._cell(args, args.granularity)
        reference = read_plan_csv(args.reference, cell.activation_ms)
        predictions = self._read_predictions(args.predictions)
        delay_ref = delay_pred = None
        if args.trace:
            demand = total_demand_per_tti(parse_trace(args.trace, cell))
            delay_ref = simulate(demand, reference, cell)
            delay_pred = simulate(demand, predictions.as_plan(cell.activation_ms), cell)

        builder = ReportBuilder(preset_models(cell))
        report = builder.build_report(reference, predictions, delay_ref, delay_pred)
        self._emit_json(report, args.out)
        if args.csv:
            ReportBuilder.write_sweep_csv([builder.sweep_row(args.granularity, report)], args.csv)
        self._show_report(report)
        return EXIT_OK

    def _run_config(self, args, granularity: str, stages: Tuple[str, ...]) -> RunConfig:
        synth = {key: getattr(args, key) for key in ('days', 'step_ms') if getattr(args, key) is not None}
        return RunConfig(
            cell_path=args.cell,
            trace_path=args.trace,
            granularity=granularity,
            output_dir=args.output_dir,
            seed=args.seed,
            overrides=self._overrides(args),
            window_k=args.window_k,
            val_split=args.val_split,
            start_date=args.start_date,
            include_weekends=args.include_weekends,
            train_range=args.train_range,
            test_range=args.test_range,
            stages=stages,
            synth=synth,
        )

    def cmd_report(self, args) -> int:
        stages = tuple(stage.strip() for stage in args.stages.split(',') if stage.strip())
        result = run_pipeline(self._run_config(args, args.granularity, stages))
        if result.report:
            self._show_report(result.report)
        self.console.print(Panel.fit(
            '\n'.join(f"{key}: {path}" for key, path in sorted(result.artifacts.items())),
            title="📁 Artifacts", border_style="blue",
        ))
        return EXIT_OK

    def cmd_sweep(self, args) -> int:
        granularities = [g.strip() for g in args.granularities.split(',') if g.strip()]
        rows = run_sweep(self._run_config(args, granularities[0], STAGES), granularities)
        self._show_sweep(rows)
        return EXIT_OK

    # display

    def _show_plan(self, plan: BandPlan, cell: CellConfig):
        table = Table(title="📋 Band plan", show_header=True, header_style="bold magenta")
        table.add_column("Bands on", style="cyan")
        table.add_column("Periods", justify="right")
        counts = plan.as_array()
        for n in range(1, cell.n_bands + 1):
            table.add_row(str(n), str(int((counts == n).sum())))
        self.console.print(table)
        if plan.partial_tail:
            self.console.print("[yellow]⚠️  Last activation period is partial[/yellow]")

    def _show_delay(self, report: DelayReport, cell: CellConfig):
        table = Table(title="⏱️  Sleep and delay", show_header=True, header_style="bold magenta")
        table.add_column("Band", style="cyan")
        table.add_column("Sleep (%)", justify="right")
        for label, pct in zip(cell.labels, report.sleep_pct):
            table.add_row(label, f"{pct:.2f}")
        self.console.print(table)
        self.console.print(
            f"Average extra delay: [bold]{report.avg_extra_delay_us:.3f} μs[/bold]  "
            f"delayed PRBs: {report.delayed_prbs}/{report.total_prbs}  "
            f"max delay: {report.max_delay_ms} ms  residual: {report.residual_backlog}"
        )

    def _show_report(self, report: Dict[str, Any]):
        metrics = report.get('metrics')
        if metrics:
            table = Table(title="📊 Prediction quality", show_header=True, header_style="bold magenta")
            for column in ('RMSE', 'Accuracy', 'QoS preservation', 'Periods'):
                table.add_column(column, justify="right")
            table.add_row(f"{metrics['rmse']:.4f}", f"{metrics['accuracy']:.2%}",
                          f"{metrics['qos_preservation']:.2%}", str(metrics['n']))
            self.console.print(table)

        table = Table(title="🔋 Energy saving", show_header=True, header_style="bold magenta")
        table.add_column("Plan", style="cyan")
        models = sorted(report['energy']['reference']['rho'])
        for model in models:
            table.add_column(f"ρ {model}", justify="right")
        table.add_column("Avg extra delay (μs)", justify="right")
        for plan in ('reference', 'predicted'):
            delay = report['delay'][plan]['avg_extra_delay_us'] if report.get('delay') else None
            table.add_row(
                plan,
                *[f"{report['energy'][plan]['rho'][model]:.4f}" for model in models],
                f"{delay:.3f}" if delay is not None else "-",
            )
        self.console.print(table)

    def _show_sweep(self, rows: List[Dict[str, Any]]):
        table = Table(title="🔄 Granularity sweep", show_header=True, header_style="bold magenta")
        table.add_column("Granularity", style="cyan")
        rho_columns = [key for key in rows[0] if key.startswith('rho_')] if rows else []
        for key in rho_columns:
            table.add_column(key, justify="right")
        table.add_column("Accuracy", justify="right")
        for row in rows:
            table.add_row(
                row['granularity'],
                *[f"{row[key]:.4f}" for key in rho_columns],
                f"{row['accuracy']:.2%}" if row['accuracy'] is not None else "-",
            )
        self.console.print(table)

    def run(self, argv: Optional[List[str]] = None) -> int:
        args = self.parser.parse_args(argv)
        handler = getattr(self, f"cmd_{args.command}")
        try:
            return handler(args)
        except StageError as e:
            self.console.print(f"[bold red]❌ Stage '{e.stage}' failed: {e.cause}[/bold red]")
            return EXIT_FAILURE
        except (BandSleepError, ValueError, OSError) as e:
            logger.error(f"✗ {args.command} failed: {e}")
            self.console.print(f"[bold red]❌ Error: {e}[/bold red]")
            return EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    try:
        return BandSleepInterface().run(argv)
    except KeyboardInterrupt:
        Console(stderr=True).print("\n[bold yellow]⚠️  Interrupted by user[/bold yellow]")
        return EXIT_INTERRUPTED


if __name__ == "__main__":
    sys.exit(main())
