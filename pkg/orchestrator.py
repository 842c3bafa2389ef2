"""Main orchestrator - runs the per-second simulation engine"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import Dict, List, Optional

import numpy as np

from agents.controller_agent import ControllerAgent
from agents.population_agent import Population, PopulationAgent
from config.scenario import DoorModel, Scenario
from config.settings import DAY_SECONDS, DEVICE_BLOCK_SIZE
from tools.door_events import DoorTracker
from tools.metrics import RunRecord, desired_power, reserve_capacity, run_summary
from tools.record_io import write_outputs
from tools.rng import SeedManager, derive_seed
from tools.signals import (FrequencySeries, apply_deadband, load_csv, moving_average,
                           synth_bias_day, synth_day, synth_noise, synth_step)
from tools.thermal import startup_power, temperature_after, thermostat_masks

logger = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """A scenario cannot be simulated as configured"""


class _Block:
    """A fixed slice of the device arrays with its parameter views"""

    def __init__(self, population: Population, start: int, stop: int):
        self.slice = slice(start, stop)
        self.params = population.params.select(self.slice)


class SimulationOrchestrator:
    """
    Coordinates the population, controller and door components over a run.

    ENGINE ORDER PER SECOND:
    1. Door mask for the step
    2. Estimator update (serial, one shared instance)
    3. Limit shifts of unlocked devices
    4. Controller-initiated switches (respect lock timers)
    5. Mandatory thermostat switches at the limits (ignore lock timers)
    6. Record aggregates, then integrate temperatures over the step

    Steps 3-6 run over fixed device blocks, optionally on a thread pool.
    Random draws are generated per step for the whole population before
    the blocks run, so the thread count never changes a result.
    """

    def __init__(self):
        self.name = "SimulationOrchestrator"
        self.start_time = time.time()
        self.activity_log = []
        self.population_agent = PopulationAgent()
        self._log_activity("System", "Simulation engine ready")
        logger.info(f"✓ {self.name} initialized")

    def _log_activity(self, source: str, message: str):
        timestamp = datetime.now().strftime("%H:%M:%S")
        self.activity_log.insert(0, {"time": timestamp, "source": source, "message": message})
        if len(self.activity_log) > 50:
            self.activity_log.pop()

    # ------------------------------------------------------------------
    # inputs
    # ------------------------------------------------------------------

    def build_signal(self, scenario: Scenario) -> FrequencySeries:
        """Frequency deviation for the run, at least `duration` samples long"""
        source = scenario.frequency
        seed = scenario.seed if source.seed is None else source.seed
        total = scenario.duration
        if source.kind == "file":
            series = load_csv(source.path)
        elif source.kind == "step":
            duration = total if source.event_duration is None else source.event_duration
            series = synth_step(source.delta, min(duration, total), total)
        elif source.kind == "constant":
            series = synth_step(source.delta, total, total)
        elif source.kind == "bias_day":
            duration = total if source.event_duration is None else source.event_duration
            series = synth_bias_day(source.delta, min(duration, total), seed, total,
                                    source.sigma, source.half_period)
        elif source.kind == "noise":
            series = synth_noise(source.bias, source.sigma, source.half_period, total, seed)
        else:
            series = synth_day(source.signal_class, seed, total)
        if len(series) < total:
            raise SimulationError(f"frequency signal has {len(series)} samples, run needs {total}")
        return series

    def door_tracker(self, scenario: Scenario, population: Population,
                     seed: Optional[int] = None) -> Optional[DoorTracker]:
        if scenario.doors is None:
            return None
        return DoorTracker(scenario.doors, population.size, scenario.seed if seed is None else seed)

    def _blocks(self, population: Population) -> List[_Block]:
        n = population.size
        return [_Block(population, start, min(start + DEVICE_BLOCK_SIZE, n))
                for start in range(0, n, DEVICE_BLOCK_SIZE)]

    # ------------------------------------------------------------------
    # engine
    # ------------------------------------------------------------------

    def _run_engine(self, population: Population, n_steps: int,
                    controller: Optional[ControllerAgent] = None,
                    control_signal: Optional[np.ndarray] = None,
                    doors: Optional[DoorTracker] = None,
                    threads: int = 1, seed: int = 0,
                    resync_interval: Optional[int] = None,
                    true_nominal: Optional[float] = None) -> Dict[str, np.ndarray]:
        """Advance the population n_steps seconds and return the per-step aggregates"""
        state = population.state
        blocks = self._blocks(population)
        seeds = SeedManager(seed)
        n = population.size
        uses_resolution = controller is not None and controller.config.resolution > 0

        series = {key: np.zeros(n_steps) for key in
                  ('power', 'on_fraction', 'mean_temp', 'shift_std', 'x', 'rho',
                   'reset', 'limit_shift', 'lock_on', 'lock_off', 'actual_duty', 'mean_temp_est')}

        def advance_block(block: _Block, out, switch_draws, shift_draws):
            sl, params = block.slice, block.params
            on = state.on_state[sl]
            since_switch = state.time_since_switch[sl]
            since_on = state.seconds_since_on[sl]
            switched_on = np.zeros(on.shape, dtype=bool)
            switched = np.zeros(on.shape, dtype=bool)

            if out is not None:
                unlocked = np.where(on, since_switch >= params.lock_on, since_switch >= params.lock_off)
                decision = controller.decide(out, on, unlocked, state.limit_shift[sl],
                                             switch_draws[sl],
                                             shift_draws[sl] if shift_draws is not None else None)
                if out.limit_shift != 0:
                    state.t_min[sl] += decision.limit_shift
                    state.t_max[sl] += decision.limit_shift
                    state.limit_shift[sl] += decision.limit_shift
                switched_on = decision.action == 1
                switched = decision.action != 0
                on = (on | switched_on) & ~(decision.action == -1)

            turn_on, turn_off = thermostat_masks(state.temperature[sl], on, state.t_min[sl], state.t_max[sl])
            on = (on | turn_on) & ~turn_off
            switched |= turn_on | turn_off
            switched_on |= turn_on
            since_switch = np.where(switched, 0.0, since_switch)
            since_on = np.where(switched_on, 0.0, since_on)

            power = np.where(on, startup_power(params, since_on), 0.0)
            temps = state.temperature[sl]
            shifts = state.limit_shift[sl]
            result = (float(np.sum(power)), int(np.count_nonzero(on)), float(np.sum(temps)),
                      float(np.sum(shifts)), float(np.sum(shifts * shifts)))

            state.on_state[sl] = on
            state.temperature[sl] = temperature_after(temps, on, params, 1.0, state.door_open[sl])
            state.time_since_switch[sl] = since_switch + 1.0
            state.seconds_since_on[sl] = since_on + 1.0
            return result

        executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
        try:
            for t in range(n_steps):
                if doors is not None:
                    state.door_open = doors.open_mask(t)

                out = None
                switch_draws = shift_draws = None
                if controller is not None:
                    if resync_interval and t > 0 and t % resync_interval == 0:
                        controller.resync(float(np.mean(state.temperature)), true_nominal)
                    out = controller.step(float(control_signal[t]))
                    rng = seeds.switching(t)
                    switch_draws = rng.random(n)
                    shift_draws = rng.random(n) if uses_resolution else None

                if executor is None:
                    results = [advance_block(b, out, switch_draws, shift_draws) for b in blocks]
                else:
                    results = list(executor.map(lambda b: advance_block(b, out, switch_draws, shift_draws), blocks))

                power = sum(r[0] for r in results)
                on_count = sum(r[1] for r in results)
                temp_sum = sum(r[2] for r in results)
                shift_sum = sum(r[3] for r in results)
                shift_sq = sum(r[4] for r in results)
                series['power'][t] = power
                series['on_fraction'][t] = on_count / n
                series['mean_temp'][t] = temp_sum / n
                series['shift_std'][t] = np.sqrt(max(0.0, shift_sq / n - (shift_sum / n) ** 2))
                if out is not None:
                    series['x'][t] = out.switch_fraction
                    series['rho'][t] = out.probability
                    series['reset'][t] = out.reset_factor
                    series['limit_shift'][t] = out.limit_shift
                    series['lock_on'][t] = out.lock_on
                    series['lock_off'][t] = out.lock_off
                    series['actual_duty'][t] = out.actual_duty
                    series['mean_temp_est'][t] = out.mean_temp
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        return series

    def run_uncontrolled(self, population: Population, n_steps: int,
                         doors: Optional[DoorTracker] = None, threads: int = 1) -> Dict[str, np.ndarray]:
        """Uncontrolled run on a copy of the population (the original state is untouched)"""
        if doors is not None:
            doors.reset()
        result = self._run_engine(population.fresh_copy(), n_steps, doors=doors, threads=threads)
        if doors is not None:
            doors.reset()
        return result

    def delta_duty_profile(self, population: Population, model: Optional[DoorModel], ensemble: int,
                           seed: int, n_steps: int = DAY_SECONDS, threads: int = 1,
                           with_doors: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Extra uncontrolled duty cycle caused by door openings, per step

        Args:
            population: sampled population
            model: door statistics (None gives a zero profile)
            ensemble: number of independent door realizations averaged
            seed: run seed; member 0 uses it directly, the others derived seeds
            n_steps: profile length
            with_doors: on-fraction of member 0 when it has already been simulated

        Returns:
            np.ndarray: smoothed, non-negative duty-cycle increase
        """
        if model is None:
            return np.zeros(n_steps)
        if ensemble < 1:
            raise SimulationError(f"door ensemble must be >= 1, got {ensemble}")
        without = self.run_uncontrolled(population, n_steps, threads=threads)['on_fraction']
        total = np.zeros(n_steps)
        for member in range(ensemble):
            if member == 0 and with_doors is not None:
                fraction = with_doors[:n_steps]
            else:
                member_seed = seed if member == 0 else derive_seed(seed, f"doors-{member}")
                tracker = DoorTracker(model, population.size, member_seed)
                fraction = self.run_uncontrolled(population, n_steps, doors=tracker, threads=threads)['on_fraction']
            total += fraction - without
        profile = self.population_agent.smooth_baseline(total / ensemble, model.smoothing_window)
        self._log_activity("DoorEvents", f"Door duty profile from {ensemble} realization(s), "
                                         f"mean {np.mean(profile):.4f}")
        return np.clip(profile, 0.0, None)

    def run(self, scenario: Scenario, population: Optional[Population] = None) -> RunRecord:
        """
        Simulate one scenario

        Args:
            scenario: validated scenario
            population: pre-sampled population to reuse (its state is not modified)

        Returns:
            RunRecord: per-step aggregates and metric summary
        """
        start = time.time()
        cfg = scenario.controller
        n_steps = scenario.duration
        self._log_activity("Orchestrator", f"Starting run '{scenario.name}' ({n_steps} s)")
        if scenario.verbose:
            logging.getLogger("agents.controller_agent").setLevel(logging.DEBUG)

        # Step 1: population and frequency
        if population is None:
            population = self.population_agent.sample_population(scenario.population, scenario.seed)
        raw = self.build_signal(scenario)
        raw_samples = raw.samples[:n_steps]
        applied = apply_deadband(raw, cfg.deadband)
        measured = moving_average(applied, cfg.filter_window).samples[:n_steps]
        applied_samples = applied.samples[:n_steps]

        # Step 2: uncontrolled reference and door trend
        doors = self.door_tracker(scenario, population)
        uncontrolled = None
        if scenario.baseline.mode == "simulated":
            uncontrolled = self.run_uncontrolled(population, n_steps, doors=doors, threads=scenario.threads)
            self._log_activity("PopulationAgent", "Uncontrolled reference run complete")

        door_duty = None
        if scenario.doors is not None:
            profile_steps = min(n_steps, DAY_SECONDS)
            reuse = uncontrolled['on_fraction'] if uncontrolled is not None else None
            door_duty = self.delta_duty_profile(population, scenario.doors, scenario.doors.duty_profile_ensemble,
                                                scenario.seed, profile_steps, scenario.threads, with_doors=reuse)

        baseline = self.population_agent.baseline_power(
            population, n_steps,
            uncontrolled=None if uncontrolled is None else uncontrolled['power'],
            door_duty=door_duty, window=scenario.baseline.window)

        # Step 3: controlled run
        controller = ControllerAgent.from_population(cfg, population, door_duty)
        true_nominal = (float(np.mean(uncontrolled['mean_temp'])) if uncontrolled is not None
                        else float(np.mean(population.state.temperature)))
        if doors is not None:
            doors.reset()
        series = self._run_engine(population.fresh_copy(), n_steps, controller=controller,
                                  control_signal=measured, doors=doors, threads=scenario.threads,
                                  seed=scenario.seed, resync_interval=cfg.resync_interval,
                                  true_nominal=true_nominal)

        p_res = reserve_capacity(population.size, population.mean_power, cfg.reserve_duty)
        record = RunRecord(
            time=np.arange(n_steps, dtype=float),
            frequency_raw=raw_samples,
            frequency=applied_samples,
            aggregate_power=series['power'],
            baseline_power=baseline,
            desired_power=desired_power(baseline, p_res, applied_samples, cfg.df_max),
            mean_temp_true=series['mean_temp'],
            mean_temp_est=series['mean_temp_est'],
            actual_duty=series['actual_duty'],
            lock_on=series['lock_on'],
            lock_off=series['lock_off'],
            on_fraction=series['on_fraction'],
            switch_fraction=series['x'],
            probability=series['rho'],
            reset_factor=series['reset'],
            limit_shift=series['limit_shift'],
            limit_shift_std=series['shift_std'],
            uncontrolled_power=None if uncontrolled is None else uncontrolled['power'],
            reserve_capacity=p_res,
            n_devices=population.size,
            mode=cfg.mode,
            nominal_temp=controller.state.nominal_temp,
            nominal_temp_true=true_nominal,
            diagnostics=dict(controller.diagnostics),
        )
        record.metrics = run_summary(record)
        elapsed = time.time() - start
        record.diagnostics['runtime_s'] = round(elapsed, 2)
        self._log_activity("Orchestrator", f"Run '{scenario.name}' finished in {elapsed:.1f}s")
        logger.info(f"[{self.name}] ✓ Run '{scenario.name}' complete - e_r,mape {record.metrics['e_r_mape']}")
        return record

    def simulate(self, scenario: Scenario) -> dict:
        """Run a scenario and write its outputs; never raises"""
        try:
            record = self.run(scenario)
            paths = {}
            if scenario.outputs.directory:
                paths = write_outputs(record, scenario)
            return {
                'success': True,
                'orchestrator': self.name,
                'record': record,
                'metrics': record.metrics,
                'outputs': {k: str(v) for k, v in paths.items()},
                'message': f"Simulated {record.n_steps} s for {record.n_devices} devices"
            }
        except Exception as e:
            logger.error(f"[{self.name}] ✗ Simulation failed: {str(e)}")
            self._log_activity("Orchestrator", f"❌ {type(e).__name__}: {e}")
            return {'success': False, 'orchestrator': self.name, 'error_type': type(e).__name__,
                    'error': e, 'message': f"Error: {str(e)}"}

    def get_system_status(self) -> dict:
        return {
            'orchestrator': self.name,
            'uptime_seconds': round(time.time() - self.start_time, 2),
            'agents': {'population': self.population_agent.get_agent_status()},
            'recent_activity': self.activity_log[:5],
        }
