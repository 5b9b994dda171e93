"""
Pipeline Runner
Runs trace -> plan -> simulate -> train -> predict -> evaluate -> report,
passing every intermediate result through files in one output directory
"""

import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import timedelta
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from dateutil import parser as date_parser

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config.bandsleep_config import MS_PER_DAY, BandSleepConfig
from config.cell_config import (
    CellConfig, cell_config_to_dict, default_cell_config, load_cell_config, with_activation_ms,
)
from evaluation.energy_model import preset_models
from evaluation.metrics import evaluate
from evaluation.report_builder import ReportBuilder
from forecast.band_predictor import (
    PredictionSeries, baseline_persistence_range, forecast_range, load_checkpoint, save_checkpoint,
)
from forecast.lstm_network import Hyperparams
from forecast.lstm_trainer import make_windows, train
from planning.band_planner import BandPlan, plan_reference, read_plan_csv, write_plan_csv
from planning.realloc_simulator import DelayReport, simulate, write_delay_report
from traces.synthetic_generator import SynthParams, generate_trace
from traces.trace_aggregator import aggregate_theta, total_demand_per_tti
from traces.trace_model import TraceSeries
from traces.trace_reader import parse_trace, write_trace
from utils.errors import BandSleepError, ConfigMismatchError, StageError
from utils.logger import setup_logger

logger = setup_logger(__name__)

STAGES = ('plan', 'simulate', 'train', 'predict', 'evaluate', 'report')

HYPERPARAM_KEYS = ('learning_rate', 'epochs', 'hidden_size', 'num_layers', 'batch_size')

ARTIFACTS = {
    'trace': 'trace.csv',
    'plan': 'plan.csv',
    'delay_reference': 'delay_reference.json',
    'delay_reference_train': 'delay_reference_train.json',
    'checkpoint': 'model.json',
    'loss': 'loss.csv',
    'predictions': 'predictions.csv',
    'delay_predicted': 'delay_predicted.json',
    'report': 'report.json',
    'report_row': 'report.csv',
    'manifest': 'manifest.json',
}


@dataclass
class RunConfig:
    """
    One pipeline invocation

    trace_path None means a synthetic trace is generated from `synth`
    (merged over the synthetic defaults) and written next to the outputs.
    """
    cell_path: Optional[str] = None
    trace_path: Optional[str] = None
    granularity: str = '10m'
    output_dir: str = 'output'
    seed: Optional[int] = None
    overrides: Dict[str, Any] = field(default_factory=dict)
    window_k: int = BandSleepConfig.TRAINING_DEFAULTS['window_k']
    val_split: float = BandSleepConfig.TRAINING_DEFAULTS['val_split']
    start_date: str = BandSleepConfig.CALENDAR['start_date']
    include_weekends: bool = BandSleepConfig.CALENDAR['include_weekends']
    train_range: Tuple[int, int] = BandSleepConfig.CALENDAR['train_range']
    test_range: Tuple[int, int] = BandSleepConfig.CALENDAR['test_range']
    stages: Tuple[str, ...] = STAGES
    synth: Dict[str, Any] = field(default_factory=dict)

    def validate(self):
        BandSleepConfig.get_granularity_ms(self.granularity)
        for path in (self.cell_path, self.trace_path):
            if path is not None and not os.path.exists(path):
                raise ConfigMismatchError(f"file does not exist: {path}")
        unknown = set(self.stages) - set(STAGES)
        if unknown:
            raise ConfigMismatchError(f"unknown stage(s): {', '.join(sorted(unknown))}")
        unknown = set(self.overrides) - set(HYPERPARAM_KEYS)
        if unknown:
            raise ConfigMismatchError(f"unknown hyperparameter override(s): {', '.join(sorted(unknown))}")
        for name in ('train_range', 'test_range'):
            lo, hi = getattr(self, name)
            if not 0 <= lo < hi:
                raise ConfigMismatchError(f"{name} must be a non-empty range, got {lo}:{hi}")
        if self.train_range[1] > self.test_range[0]:
            raise ConfigMismatchError("the training days must end before the test days start")
        if not 0.0 <= self.val_split < 1.0:
            raise ConfigMismatchError("val_split must lie in [0, 1)")

    def resolved_seed(self) -> int:
        return BandSleepConfig.get_seed(self.seed)

    def hyperparams(self) -> Hyperparams:
        preset = BandSleepConfig.get_hyperparam_preset(self.granularity)
        preset.update(self.overrides)
        return Hyperparams(window_k=self.window_k, seed=self.resolved_seed(), **preset)

    def canonical(self) -> Dict[str, Any]:
        """Settings that determine the outputs; the output directory is not one of them"""
        data = asdict(self)
        data.pop('output_dir')
        data['seed'] = self.resolved_seed()
        data['stages'] = list(self.stages)
        data['train_range'] = list(self.train_range)
        data['test_range'] = list(self.test_range)
        data['hyperparams'] = self.hyperparams().to_dict()
        return data


@dataclass
class PipelineResult:
    output_dir: str
    artifacts: Dict[str, str]
    report: Optional[Dict[str, Any]] = None


def working_days(n_days: int, start_date: str, include_weekends: bool) -> List[int]:
    """Trace day indices kept by the calendar filter"""
    start = date_parser.isoparse(start_date)
    return [
        day for day in range(n_days)
        if include_weekends or (start + timedelta(days=day)).weekday() < 5
    ]


def select_working_days(n_days: int, day_range: Tuple[int, int], start_date: str,
                        include_weekends: bool) -> List[int]:
    """Trace day indices of the working days lo..hi-1"""
    days = working_days(n_days, start_date, include_weekends)
    lo, hi = day_range
    if hi > len(days):
        raise ConfigMismatchError(
            f"trace holds {len(days)} usable day(s), the range {lo}:{hi} needs {hi}"
        )
    return days[lo:hi]


def partition_days(n_days: int, config: RunConfig) -> Tuple[List[int], List[int]]:
    """Train and test trace days from working-day index ranges"""
    train_days = select_working_days(n_days, config.train_range, config.start_date, config.include_weekends)
    test_days = select_working_days(n_days, config.test_range, config.start_date, config.include_weekends)
    return train_days, test_days


def plan_for_days(plan: BandPlan, days: List[int], periods_per_day: int) -> BandPlan:
    """Concatenate the periods of the given trace days"""
    counts = plan.as_array()
    if days and (max(days) + 1) * periods_per_day > counts.size:
        raise ConfigMismatchError(
            f"plan covers {counts.size // periods_per_day} day(s), day {max(days)} requested"
        )
    selected = [counts[day * periods_per_day:(day + 1) * periods_per_day] for day in days]
    merged = np.concatenate(selected) if selected else np.zeros(0, dtype=np.int64)
    return BandPlan(plan.activation_ms, tuple(merged.tolist()))


def sha256_of(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(data: Any, path: str):
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(data, handle, indent=2, sort_keys=True)
        handle.write('\n')


def _read_json(path: str) -> Any:
    with open(path, 'r', encoding='utf-8') as handle:
        return json.load(handle)


class PipelineRunner:
    """Executes the requested stages of one RunConfig"""

    def __init__(self, config: RunConfig, trace: Optional[TraceSeries] = None):
        config.validate()
        self.config = config
        self.logger = setup_logger(__name__)
        self.output_dir = config.output_dir
        self.artifacts: Dict[str, str] = {}
        self.seed = config.resolved_seed()
        self.activation_ms = BandSleepConfig.get_granularity_ms(config.granularity)
        if MS_PER_DAY % self.activation_ms:
            raise ConfigMismatchError(f"activation period {config.granularity} does not tile a day")
        base = load_cell_config(config.cell_path) if config.cell_path else default_cell_config()
        self.cell: CellConfig = with_activation_ms(base, self.activation_ms)
        self.periods_per_day = MS_PER_DAY // self.activation_ms
        self._trace: Optional[TraceSeries] = None
        self.synth_digest: Optional[str] = None
        if trace is not None:
            # same bands, this run's activation period
            self._trace = TraceSeries(self.cell, trace.loads, trace.step_ms)
        self.train_days: List[int] = []
        self.test_days: List[int] = []
        if BandSleepConfig.is_indicative(config.granularity):
            self.logger.warning(
                f"Activation period {config.granularity} is indicative only: "
                f"bands cannot be switched that fast in practice"
            )

    def path(self, key: str) -> str:
        return os.path.join(self.output_dir, ARTIFACTS[key])

    def _write_artifact(self, key: str, writer: Callable[[str], None]):
        """Write through `<name>.partial`, then rename into place"""
        final = self.path(key)
        partial = final + '.partial'
        writer(partial)
        os.replace(partial, final)
        self.artifacts[key] = final

    # trace and calendar

    def _trace_path(self) -> str:
        return self.config.trace_path or self.path('trace')

    def _synth_params(self) -> SynthParams:
        synth = BandSleepConfig.get_synth_defaults()
        synth.update(self.config.synth)
        return SynthParams(seed=self.seed, start_date=self.config.start_date, **synth)

    def _synth_digest(self, params: SynthParams) -> str:
        """Identity of a generated trace: generator settings plus the bands they fill"""
        cell = cell_config_to_dict(self.cell)
        source = {'synth': asdict(params), 'bands': cell['bands'], 'realloc_ms': cell['realloc_ms']}
        encoded = json.dumps(source, sort_keys=True, separators=(',', ':')).encode('utf-8')
        return hashlib.sha256(encoded).hexdigest()

    def _recorded_synth_digest(self) -> Optional[str]:
        if not os.path.exists(self.path('manifest')):
            return None
        try:
            return _read_json(self.path('manifest')).get('trace_synth_sha256')
        except json.JSONDecodeError:
            return None

    def _ensure_trace(self):
        if self.config.trace_path is not None:
            return
        params = self._synth_params()
        self.synth_digest = self._synth_digest(params)
        if os.path.exists(self.path('trace')) and self._recorded_synth_digest() == self.synth_digest:
            self.artifacts['trace'] = self.path('trace')
            return
        trace = generate_trace(params, self.cell)
        self._write_artifact('trace', lambda p: write_trace(trace, p, compact=True))
        self._trace = trace

    def trace(self) -> TraceSeries:
        if self._trace is None:
            self._trace = parse_trace(self._trace_path(), self.cell)
        return self._trace

    def _partition(self):
        self.train_days, self.test_days = partition_days(self.trace().n_days, self.config)

    @property
    def n_train(self) -> int:
        return len(self.train_days) * self.periods_per_day

    @property
    def n_total(self) -> int:
        return (len(self.train_days) + len(self.test_days)) * self.periods_per_day

    def _test_demand(self):
        return total_demand_per_tti(self.trace().select_days(self.test_days))

    def _plan(self) -> BandPlan:
        return read_plan_csv(self.path('plan'), self.activation_ms)

    # stages

    def stage_plan(self):
        selected = self.trace().select_days(self.train_days + self.test_days)
        plan = plan_reference(aggregate_theta(selected), self.cell)
        self._write_artifact('plan', lambda p: write_plan_csv(plan, p))
        self.logger.info(f"✓ Planned {len(plan)} periods of {self.config.granularity}")

    def stage_simulate(self):
        plan = self._plan()
        train_demand = total_demand_per_tti(self.trace().select_days(self.train_days))
        train_report = simulate(train_demand, plan.sub_plan(0, self.n_train), self.cell)
        self._write_artifact('delay_reference_train', lambda p: write_delay_report(train_report, p))

        report = simulate(self._test_demand(), plan.sub_plan(self.n_train, self.n_total), self.cell)
        self._write_artifact('delay_reference', lambda p: write_delay_report(report, p))
        self.logger.info(
            f"✓ Reference plan: avg extra delay {train_report.avg_extra_delay_us:.3f} us on the training days, "
            f"{report.avg_extra_delay_us:.3f} us on the test days"
        )

    def stage_train(self):
        hp = self.config.hyperparams()
        train_plan = self._plan().sub_plan(0, self.n_train)
        dataset = make_windows(train_plan, hp.window_k, self.cell.n_bands)
        result = train(dataset, hp, val_split=self.config.val_split)
        self._write_artifact('checkpoint', lambda p: save_checkpoint(result.model, p))

        n_epochs = len(result.train_loss)
        losses = pd.DataFrame({
            'epoch': np.arange(1, n_epochs + 1),
            'train_loss': result.train_loss,
            'val_loss': result.val_loss if len(result.val_loss) == n_epochs else [np.nan] * n_epochs,
        })
        self._write_artifact('loss', lambda p: losses.to_csv(p, index=False, lineterminator='\n'))

    def stage_predict(self):
        model = load_checkpoint(self.path('checkpoint'))
        predictions = forecast_range(model, self._plan(), self.n_train, self.n_total)
        frame = pd.DataFrame({
            'period_index': np.arange(len(predictions)),
            'n_bands': list(predictions.counts),
            'raw': list(predictions.raw),
        })
        self._write_artifact('predictions', lambda p: frame.to_csv(p, index=False, lineterminator='\n'))
        self.logger.info(f"✓ Predicted {len(predictions)} periods")

    def _read_predictions(self) -> PredictionSeries:
        frame = pd.read_csv(self.path('predictions'))
        return PredictionSeries(
            tuple(int(v) for v in frame['n_bands']),
            tuple(float(v) for v in frame['raw']),
        )

    def stage_evaluate(self):
        plan = self._plan()
        test_plan = plan.sub_plan(self.n_train, self.n_total)
        predictions = self._read_predictions()
        delay_pred = simulate(self._test_demand(), predictions.as_plan(self.activation_ms), self.cell)
        self._write_artifact('delay_predicted', lambda p: write_delay_report(delay_pred, p))
        delay_ref = DelayReport.from_dict(_read_json(self.path('delay_reference')))

        builder = ReportBuilder(preset_models(self.cell))
        report = builder.build_report(test_plan, predictions, delay_ref, delay_pred)
        persistence = baseline_persistence_range(plan, self.n_train, self.n_total)
        report['baseline_persistence'] = evaluate(persistence, test_plan).to_dict()
        report['granularity'] = self.config.granularity
        if os.path.exists(self.path('delay_reference_train')):
            train_delay = _read_json(self.path('delay_reference_train'))
            report['reference_train'] = {
                'n_periods': self.n_train,
                'sleep_pct': train_delay['sleep_pct'],
                'avg_extra_delay_us': train_delay['avg_extra_delay_us'],
            }
        self._write_artifact('report', lambda p: _write_json(report, p))

    def stage_report(self) -> Dict[str, Any]:
        report = _read_json(self.path('report'))
        builder = ReportBuilder(preset_models(self.cell))
        rows = [builder.sweep_row(self.config.granularity, report)]
        self._write_artifact('report_row', lambda p: ReportBuilder.write_sweep_csv(rows, p))
        for path in builder.write_gnuplot_files(rows, self.output_dir):
            self.artifacts[os.path.basename(path)] = path
        return report

    def _write_manifest(self):
        canonical = self.config.canonical()
        encoded = json.dumps(canonical, sort_keys=True, separators=(',', ':')).encode('utf-8')
        manifest = {
            'package': 'bandsleep',
            'version': BandSleepConfig.VERSION,
            'libraries': {'numpy': np.__version__, 'pandas': pd.__version__},
            'seed': self.seed,
            'config': canonical,
            'config_sha256': hashlib.sha256(encoded).hexdigest(),
            'partition': {'train_days': self.train_days, 'test_days': self.test_days},
            'trace_synth_sha256': self.synth_digest,
            'artifacts': {
                os.path.basename(path): sha256_of(path) for _, path in sorted(self.artifacts.items())
            },
        }
        self._write_artifact('manifest', lambda p: _write_json(manifest, p))

    def run(self) -> PipelineResult:
        os.makedirs(self.output_dir, exist_ok=True)
        report = None
        stage = 'trace'
        try:
            self._ensure_trace()
            self._partition()
            for stage in STAGES:
                if stage not in self.config.stages:
                    continue
                self.logger.info(f"▶ Stage '{stage}' ({self.config.granularity})")
                outcome = getattr(self, f'stage_{stage}')()
                if stage == 'report':
                    report = outcome
            stage = 'manifest'
            self._write_manifest()
        except (BandSleepError, ValueError, OSError) as exc:
            self.logger.error(f"✗ Stage '{stage}' failed: {exc}")
            raise StageError(stage, exc) from exc

        if report is None and os.path.exists(self.path('report')) and 'evaluate' in self.config.stages:
            report = _read_json(self.path('report'))
        self.logger.info(f"✓ Pipeline finished in {self.output_dir}")
        return PipelineResult(self.output_dir, dict(self.artifacts), report)


def run_pipeline(config: RunConfig) -> PipelineResult:
    return PipelineRunner(config).run()


def run_sweep(config: RunConfig, granularities: Optional[List[str]] = None) -> List[Dict[str, Any]]:
    """
    Run the full pipeline once per granularity

    Each run gets a sub-directory named after its granularity; sweep.csv
    and the gnuplot data files land in config.output_dir.
    """
    granularities = granularities or BandSleepConfig.sweep_granularities()
    os.makedirs(config.output_dir, exist_ok=True)

    # one trace shared by every granularity, parsed or generated once
    runner = PipelineRunner(RunConfig(**{**asdict(config), 'stages': ()}))
    runner._ensure_trace()
    trace_path = runner._trace_path()
    trace = runner.trace()

    reports = {}
    for granularity in granularities:
        sub = RunConfig(**{
            **asdict(config),
            'granularity': granularity,
            'trace_path': trace_path,
            'output_dir': os.path.join(config.output_dir, granularity),
            'stages': STAGES,
        })
        reports[granularity] = PipelineRunner(sub, trace=trace).run().report

    builder = ReportBuilder(preset_models(runner.cell))
    rows = builder.sweep_rows(reports)
    ReportBuilder.write_sweep_csv(rows, os.path.join(config.output_dir, 'sweep.csv'))
    builder.write_gnuplot_files(rows, config.output_dir)
    logger.info(f"✓ Sweep over {', '.join(granularities)} written to {config.output_dir}")
    return rows
