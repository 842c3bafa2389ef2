"""Sweep Agent - parameter sweeps, seed ensembles and corrective-gain tuning"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from agents.analysis_agent import GainBoundInputs, kc_lower_bound, kc_upper_bound
from agents.population_agent import PopulationAgent
from config.scenario import Scenario, apply_override, scenario_from_dict
from config.settings import SWEEP_WORKERS
from tools.rng import derive_seed

logger = logging.getLogger(__name__)

# Metrics aggregated across an ensemble
SWEEP_METRICS = ['e_r_mape', 'e_t_mape', 'e_b_mape', 'temperature_rmse_C', 'max_temperature_deviation_C']

DEFAULT_GAINS = [round(0.1e-4 * k, 10) for k in range(1, 11)]


def _run_point(raw: dict) -> dict:
    """Run one scenario in a worker process; returns its metrics"""
    from orchestrator import SimulationOrchestrator

    scenario = scenario_from_dict(raw)
    record = SimulationOrchestrator().run(scenario)
    return {key: record.metrics.get(key) for key in SWEEP_METRICS}


def ensemble_seeds(seed: int, repeats: int) -> List[int]:
    """seed_i = hash(seed, i); a single repeat keeps the scenario seed"""
    if repeats <= 1:
        return [seed]
    return [derive_seed(seed, i) for i in range(repeats)]


class SweepAgent:
    """Runs one scenario per (axis value, mode, repeat) and tabulates metrics"""

    def __init__(self, workers: int = SWEEP_WORKERS):
        self.name = "SweepAgent"
        self.workers = max(1, workers)
        logger.info(f"✓ {self.name} initialized")

    def _points(self, template: Scenario, axis: str, values: Sequence, repeats: int,
                modes: Optional[Iterable[str]]):
        points = []
        for value in values:
            base = apply_override(template, axis, value)
            for mode in (modes or [base.controller.mode]):
                raw = base.model_dump()
                raw['controller']['mode'] = mode
                raw['outputs']['directory'] = None
                for repeat, seed in enumerate(ensemble_seeds(template.seed, repeats)):
                    raw = dict(raw, seed=seed)
                    points.append(({'value': value, 'mode': mode, 'repeat': repeat, 'seed': seed}, raw))
        return points

    def run_points(self, points) -> pd.DataFrame:
        """Execute sweep points serially or across worker processes, keeping point order"""
        raws = [raw for _, raw in points]
        if self.workers > 1 and len(raws) > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(_run_point, raws))
        else:
            results = [_run_point(raw) for raw in raws]
        return pd.DataFrame([{**key, **metrics} for (key, _), metrics in zip(points, results)])

    def sweep(self, template: Scenario, axis: str, values: Sequence, repeats: int = 1,
              modes: Optional[Iterable[str]] = None) -> dict:
        """
        One run (or seed ensemble) per axis value

        Args:
            template: scenario every point starts from
            axis: one of the sweep axes (N_r, D_r, u, t_on_l, K_c, dT_res, doors)
            values: axis values
            repeats: ensemble size per value
            modes: controller modes to compare (defaults to the template's)

        Returns:
            dict: 'runs' has one row per run, 'table' the mean/min/max per (value, mode)
        """
        try:
            points = self._points(template, axis, values, repeats, modes)
            logger.info(f"[{self.name}] Sweeping {axis} over {len(values)} value(s), {len(points)} run(s)")
            runs = self.run_points(points)
            table = runs.groupby(['value', 'mode'], sort=False)[SWEEP_METRICS].agg(['mean', 'min', 'max'])
            table.columns = [f"{metric}_{stat}" for metric, stat in table.columns]
            table = table.reset_index()
            table.insert(0, 'axis', axis)
            logger.info(f"[{self.name}] ✓ Sweep of {axis} complete")
            return {
                'success': True,
                'agent': self.name,
                'runs': runs,
                'table': table,
                'message': f"{len(points)} run(s) over {len(values)} value(s)"
            }
        except Exception as e:
            logger.error(f"[{self.name}] ✗ Sweep failed: {str(e)}")
            return {'success': False, 'agent': self.name, 'error': e, 'message': f"Error: {str(e)}"}

    def gain_bounds(self, scenario: Scenario, delta: float = 0.0192, event_duration: int = 54_000,
                    recovery_duration: int = 32_400, max_deviation: float = 1.0,
                    recovery_deviation: float = 0.2) -> dict:
        """K_c bounds from the scenario's sampled population means"""
        population = PopulationAgent().sample_population(scenario.population, scenario.population_seed)
        cfg = scenario.controller
        upper = kc_upper_bound(alpha=population.mean_alpha,
                               cooling_rate=population.mean_beta * population.mean_power,
                               ambient=population.mean_ambient, deadband=population.mean_deadband,
                               nominal_temp=population.nominal_temp)
        inputs = GainBoundInputs.from_means(delta, event_duration, recovery_duration, max_deviation,
                                            recovery_deviation, cfg.reserve_duty, population.mean_beta,
                                            population.mean_power, df_max=cfg.df_max)
        lower = kc_lower_bound(inputs)
        return {'upper': upper, 'lower': lower.gain, 'feasible': lower.feasible, 'message': lower.message}

    def tune_gain(self, scenario: Scenario, gains: Optional[Sequence[float]] = None, repeats: int = 1) -> dict:
        """Corrective-gain bounds followed by a K_c sweep"""
        try:
            bounds = self.gain_bounds(scenario)
            logger.info(f"[{self.name}] K_c bounds: lower {bounds['lower']}, upper {bounds['upper']:.4e}")
            result = self.sweep(scenario, 'K_c', list(gains or DEFAULT_GAINS), repeats=repeats)
            if not result['success']:
                return result
            table = result['table']
            lower = bounds['lower'] if bounds['feasible'] else np.inf
            table['within_bounds'] = (table['value'] >= lower) & (table['value'] <= bounds['upper'])
            return {
                'success': True,
                'agent': self.name,
                'bounds': bounds,
                'table': table,
                'message': f"Tuned K_c over {len(table)} gain(s)"
            }
        except Exception as e:
            logger.error(f"[{self.name}] ✗ Gain tuning failed: {str(e)}")
            return {'success': False, 'agent': self.name, 'error': e, 'message': f"Error: {str(e)}"}

    def get_agent_status(self) -> dict:
        return {
            'name': self.name,
            'status': 'active',
            'workers': self.workers,
            'capabilities': ['sweep', 'tune_gain', 'gain_bounds'],
            'ready': True
        }
