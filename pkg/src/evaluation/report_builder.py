"""
Report Builder
Compares a predicted band plan with the reference plan: forecast metrics,
energy saving per consumption model, and the energy / delay trade-off
"""

import os
import sys
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from evaluation.energy_model import EnergyModel, beta_from_sleep_pct, energy_report
from evaluation.metrics import evaluate
from forecast.band_predictor import PredictionSeries
from planning.band_planner import BandPlan
from planning.realloc_simulator import DelayReport, sleep_percentages
from utils.errors import ContractViolationError
from utils.logger import setup_logger

PLANS = ('reference', 'predicted')


class ReportBuilder:
    """Assembles per-run reports and the granularity sweep tables"""

    def __init__(self, models: Sequence[EnergyModel]):
        self.logger = setup_logger(__name__)
        if not models:
            raise ContractViolationError("at least one energy model is required")
        self.models = list(models)
        if len({len(model.weights) for model in self.models}) != 1:
            raise ContractViolationError("energy models disagree on the number of bands")

    @property
    def n_bands(self) -> int:
        return len(self.models[0].weights)

    def build_report(self, ref_plan: BandPlan, pred_plan: Union[BandPlan, PredictionSeries],
                     delay_ref: Optional[DelayReport] = None,
                     delay_pred: Optional[DelayReport] = None) -> Dict[str, Any]:
        """
        Combined report of one prediction run

        Args:
            ref_plan: Plan computed with perfect knowledge of the traffic
            pred_plan: Forecast plan over the same periods
            delay_ref: Simulation of the reference plan, if a trace was given
            delay_pred: Simulation of the forecast plan, if a trace was given

        Returns:
            Dictionary with metrics, energy, delay, tradeoff and summary sections
        """
        if len(ref_plan) != len(pred_plan):
            raise ContractViolationError(
                f"reference plan has {len(ref_plan)} periods, prediction has {len(pred_plan)}"
            )
        if (delay_ref is None) != (delay_pred is None):
            raise ContractViolationError("pass both delay reports or neither")
        n_bands = self.n_bands
        for delay in (delay_ref, delay_pred):
            if delay is not None and len(delay.sleep_pct) != n_bands:
                raise ContractViolationError(
                    f"delay report covers {len(delay.sleep_pct)} bands, energy models {n_bands}"
                )
        for plan in (ref_plan, pred_plan):
            if len(plan) and max(plan.counts) > n_bands:
                raise ContractViolationError(f"plan asks for more than {n_bands} bands")

        predicted = pred_plan if isinstance(pred_plan, BandPlan) else pred_plan.as_plan(ref_plan.activation_ms)
        plans = {'reference': ref_plan, 'predicted': predicted}
        delays = {'reference': delay_ref, 'predicted': delay_pred}

        energy = {}
        for name, plan in plans.items():
            beta = beta_from_sleep_pct(sleep_percentages(plan, n_bands))
            energy[name] = energy_report(beta, self.models)

        tradeoff = []
        for name in PLANS:
            for model in self.models:
                tradeoff.append({
                    'plan': name,
                    'model': model.name,
                    'relative_consumption': energy[name].relative_consumption[model.name],
                    'avg_extra_delay_us': delays[name].avg_extra_delay_us if delays[name] is not None else None,
                })

        metrics = evaluate(pred_plan, ref_plan) if len(ref_plan) else None
        report = {
            'n_periods': len(ref_plan),
            'activation_ms': ref_plan.activation_ms,
            'metrics': metrics.to_dict() if metrics else None,
            'energy': {name: energy[name].to_dict() for name in PLANS},
            'delay': {name: delays[name].to_dict() for name in PLANS} if delay_ref is not None else None,
            'tradeoff': tradeoff,
        }
        report['summary'] = self._generate_summary(report, ref_plan, predicted)
        self.logger.info(
            f"✓ Report over {len(ref_plan)} periods: "
            + ', '.join(f"rho[{m.name}] ref {energy['reference'].rho_per_model[m.name]:.4f} "
                        f"pred {energy['predicted'].rho_per_model[m.name]:.4f}" for m in self.models)
        )
        return report

    def _generate_summary(self, report: Dict[str, Any], ref_plan: BandPlan,
                          predicted: BandPlan) -> Dict[str, Any]:
        ref, pred = ref_plan.as_array(), predicted.as_array()
        return {
            'under_provisioned_periods': int(np.count_nonzero(pred < ref)),
            'over_provisioned_periods': int(np.count_nonzero(pred > ref)),
            'extra_delay_us_difference': (
                report['delay']['predicted']['avg_extra_delay_us']
                - report['delay']['reference']['avg_extra_delay_us']
            ) if report['delay'] else None,
        }

    def sweep_row(self, granularity: str, report: Dict[str, Any]) -> Dict[str, Any]:
        """Flatten one run's report into a sweep table row"""
        row: Dict[str, Any] = {'granularity': granularity, 'activation_ms': report['activation_ms']}
        for index, beta in enumerate(report['energy']['reference']['beta'], 1):
            row[f'sleep_band{index}_pct'] = 100.0 * beta
        for model in self.models:
            for name, short in (('reference', 'ref'), ('predicted', 'pred')):
                row[f'rho_{short}_{model.name}'] = report['energy'][name]['rho'][model.name]
        delay = report['delay'] or {}
        for name, short in (('reference', 'ref'), ('predicted', 'pred')):
            row[f'avg_delay_us_{short}'] = delay[name]['avg_extra_delay_us'] if delay else None
        # reference plan over the training days, when the run simulated them
        train = report.get('reference_train') or {}
        for index in range(1, self.n_bands + 1):
            row[f'train_sleep_band{index}_pct'] = train['sleep_pct'][index - 1] if train else None
        row['avg_delay_us_ref_train'] = train.get('avg_extra_delay_us')
        metrics = report['metrics'] or {}
        for key in ('rmse', 'accuracy', 'qos_preservation'):
            row[key] = metrics.get(key)
        return row

    def sweep_rows(self, reports: Dict[str, Dict[str, Any]]) -> List[Dict[str, Any]]:
        return [self.sweep_row(granularity, report) for granularity, report in reports.items()]

    @staticmethod
    def write_sweep_csv(rows: List[Dict[str, Any]], path: str):
        pd.DataFrame(rows).to_csv(path, index=False, lineterminator='\n')

    def write_gnuplot_files(self, rows: List[Dict[str, Any]], output_dir: str) -> List[str]:
        """
        Whitespace-separated data files for plotting

        energy_saving.dat: granularity, then rho ref / pred per model.
        energy_vs_delay.dat: relative consumption and average extra delay
        per granularity, plan and model.
        """
        saving_columns = ['granularity']
        for model in self.models:
            saving_columns += [f'rho_ref_{model.name}', f'rho_pred_{model.name}']
        saving = pd.DataFrame(rows, columns=saving_columns)

        points = []
        for row in rows:
            for model in self.models:
                for short in ('ref', 'pred'):
                    points.append({
                        'relative_consumption': 1.0 - row[f'rho_{short}_{model.name}'],
                        'avg_extra_delay_us': row[f'avg_delay_us_{short}'],
                        'granularity': row['granularity'],
                        'plan': short,
                        'model': model.name,
                    })
        tradeoff = pd.DataFrame(points, columns=['relative_consumption', 'avg_extra_delay_us',
                                                 'granularity', 'plan', 'model'])

        paths = []
        for name, frame in (('energy_saving.dat', saving), ('energy_vs_delay.dat', tradeoff)):
            path = os.path.join(output_dir, name)
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write('# ' + ' '.join(frame.columns) + '\n')
                frame.to_csv(handle, sep=' ', header=False, index=False, na_rep='NaN', lineterminator='\n')
            paths.append(path)
        self.logger.info(f"✓ Wrote gnuplot data to {output_dir}")
        return paths


def build_report(ref_plan: BandPlan, pred_plan: Union[BandPlan, PredictionSeries],
                 delay_ref: Optional[DelayReport], delay_pred: Optional[DelayReport],
                 models: Sequence[EnergyModel]) -> Dict[str, Any]:
    return ReportBuilder(models).build_report(ref_plan, pred_plan, delay_ref, delay_pred)
