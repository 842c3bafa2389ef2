"""Population Agent - samples the refrigerator fleet and computes aggregate power"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from config.scenario import PopulationSpec
from config.settings import BASELINE_WINDOW, COOLING_MARGIN
from tools.rng import SeedManager, truncated_normal
from tools.thermal import DeviceState, ThermalParams, cycle_durations, startup_power, temperature_after

logger = logging.getLogger(__name__)


class PopulationError(ValueError):
    """Population cannot be sampled from the given spec"""


@dataclass
class Population:
    """Sampled device parameters (immutable) and their dynamic state"""

    params: ThermalParams
    state: DeviceState
    t_on: np.ndarray
    t_off: np.ndarray
    duty: np.ndarray
    seed: int

    @property
    def size(self) -> int:
        return len(self.params)

    @property
    def mean_power(self) -> float:
        return float(np.mean(self.params.nominal_power))

    @property
    def mean_peak_factor(self) -> float:
        return float(np.mean(self.params.peak_factor))

    @property
    def mean_startup_duration(self) -> float:
        return float(np.mean(self.params.startup_duration))

    @property
    def mean_beta(self) -> float:
        return float(np.mean(self.params.beta))

    @property
    def mean_alpha(self) -> float:
        return float(np.mean(self.params.alpha))

    @property
    def mean_ambient(self) -> float:
        return float(np.mean(self.params.ambient))

    @property
    def mean_deadband(self) -> float:
        return float(np.mean(self.params.deadband_width))

    @property
    def mean_lock_on(self) -> float:
        return float(np.mean(self.params.lock_on))

    @property
    def mean_lock_off(self) -> float:
        return float(np.mean(self.params.lock_off))

    @property
    def nominal_temp(self) -> float:
        return float(np.mean(self.params.setpoint))

    @property
    def expected_on(self) -> float:
        return float(np.mean(self.t_on))

    @property
    def expected_off(self) -> float:
        return float(np.mean(self.t_off))

    @property
    def nominal_duty(self) -> float:
        return float(np.mean(self.duty))

    @property
    def lock_on_horizon(self) -> int:
        """N_on: first whole second by which every on-lock has expired"""
        return int(math.ceil(float(np.max(self.params.lock_on))))

    @property
    def lock_off_horizon(self) -> int:
        return int(math.ceil(float(np.max(self.params.lock_off))))

    def lock_cdf(self, kind: str, horizon: Optional[int] = None) -> np.ndarray:
        """Empirical CDF F(j) = P(t^l <= j) for j = 0..horizon"""
        locks = np.sort(np.asarray(self.params.lock_on if kind == "on" else self.params.lock_off))
        if horizon is None:
            horizon = self.lock_on_horizon if kind == "on" else self.lock_off_horizon
        grid = np.arange(horizon + 1)
        return np.searchsorted(locks, grid, side="right") / locks.size

    def mean_params(self) -> ThermalParams:
        """A single representative device built from population means"""
        p = self.params
        return ThermalParams(
            alpha=self.mean_alpha,
            beta=self.mean_beta,
            thermal_resistance=float(np.mean(p.thermal_resistance)),
            door_open_resistance=float(np.mean(p.door_open_resistance)),
            ambient=self.mean_ambient,
            nominal_power=self.mean_power,
            cop=float(np.mean(p.cop)),
            peak_factor=self.mean_peak_factor,
            startup_duration=self.mean_startup_duration,
            lock_on=self.mean_lock_on,
            lock_off=self.mean_lock_off,
            deadband_width=self.mean_deadband,
            setpoint=self.nominal_temp,
        )

    def fresh_copy(self) -> "Population":
        """Same devices, state copied so a run can mutate it"""
        return Population(params=self.params, state=self.state.copy(), t_on=self.t_on,
                          t_off=self.t_off, duty=self.duty, seed=self.seed)


class PopulationAgent:
    """
    Samples heterogeneous refrigerators from the parameter distributions
    and reports their aggregate and baseline power
    """

    def __init__(self):
        self.name = "PopulationAgent"
        logger.info(f"✓ {self.name} initialized")

    def sample_population(self, spec: PopulationSpec, seed: int) -> Population:
        """
        Draw every device independently from the spec's distributions

        Args:
            spec: population distributions and size
            seed: run seed (the spec's own seed wins when set)

        Returns:
            Population: devices with phase-desynchronized initial states
        """
        if spec.size < 1:
            raise PopulationError(f"population size must be >= 1, got {spec.size}")
        seed = seed if spec.seed is None else spec.seed
        rng = SeedManager(seed).population()
        n = spec.size

        ambient = rng.uniform(spec.ambient.low, spec.ambient.high, n)
        deadband = rng.uniform(spec.deadband.low, spec.deadband.high, n)
        setpoint = rng.uniform(spec.setpoint.low, spec.setpoint.high, n)
        alpha = rng.uniform(spec.alpha.low, spec.alpha.high, n)
        power = rng.uniform(spec.nominal_power.low, spec.nominal_power.high, n)
        peak = truncated_normal(rng, spec.peak_factor.mean, spec.peak_factor.std, n)
        startup = truncated_normal(rng, spec.startup_duration.mean, spec.startup_duration.std, n, low=1e-3)
        lock_on = truncated_normal(rng, spec.lock_on.mean, spec.lock_on.std, n)

        # beta stays large enough that the compressor out-cools the heat load
        t_min = setpoint - 0.5 * deadband
        beta_floor = COOLING_MARGIN * (ambient - t_min) * alpha / power
        beta = truncated_normal(rng, spec.beta.mean, spec.beta.std, n, low=beta_floor)

        draft = ThermalParams.from_rates(alpha=alpha, beta=beta, ambient=ambient, nominal_power=power,
                                         setpoint=setpoint, deadband_width=deadband, cop=spec.cop,
                                         door_resistance_ratio=spec.door_resistance_ratio)
        t_on, t_off, duty = cycle_durations(draft, draft.initial_t_min, draft.initial_t_max)
        lock_off = truncated_normal(rng, spec.lock_off.mean, spec.lock_off.std, n, high=t_off)

        params = ThermalParams.from_rates(alpha=alpha, beta=beta, ambient=ambient, nominal_power=power,
                                          setpoint=setpoint, deadband_width=deadband, cop=spec.cop,
                                          door_resistance_ratio=spec.door_resistance_ratio,
                                          peak_factor=peak, startup_duration=startup,
                                          lock_on=lock_on, lock_off=lock_off).validate()

        state = self._initial_state(params, t_on, t_off, duty, rng)
        population = Population(params=params, state=state, t_on=t_on, t_off=t_off, duty=duty, seed=seed)
        logger.info(f"[{self.name}] ✓ Sampled {n} devices - mean P_n {population.mean_power:.2f} W, "
                    f"nominal duty {population.nominal_duty:.4f}")
        return population

    def _initial_state(self, params: ThermalParams, t_on, t_off, duty, rng) -> DeviceState:
        """On/off ~ Bernoulli(duty) with a uniform phase inside the current cycle"""
        n = len(params)
        on = rng.random(n) < duty
        phase = rng.random(n) * np.where(on, t_on, t_off)
        t_min = params.initial_t_min
        t_max = params.initial_t_max
        cooling = temperature_after(t_max, True, params, phase)
        warming = temperature_after(t_min, False, params, phase)
        return DeviceState(
            temperature=np.where(on, cooling, warming),
            on_state=on,
            t_min=np.array(t_min, dtype=float),
            t_max=np.array(t_max, dtype=float),
            time_since_switch=phase,
            door_open=np.zeros(n, dtype=bool),
            seconds_since_on=np.where(on, phase, t_on + phase),
            limit_shift=np.zeros(n),
        )

    def aggregate_power(self, population: Population) -> float:
        """Sum of on-device powers including the startup overshoot, W"""
        state = population.state
        power = startup_power(population.params, state.seconds_since_on)
        return float(np.sum(np.where(state.on_state, power, 0.0)))

    def closed_form_baseline(self, population: Population) -> float:
        """
        Uncontrolled steady power: sum_i P_n,i * (D_i + u_i*N_s,i / (2*(t_on,i + t_off,i)))

        The second term spreads each start's extra energy u*N_s*P_n/2 over
        the device's cycle period.
        """
        p = population.params
        uplift = p.peak_factor * p.startup_duration / (2.0 * (population.t_on + population.t_off))
        return float(np.sum(p.nominal_power * (population.duty + uplift)))

    def smooth_baseline(self, series: np.ndarray, window: int = BASELINE_WINDOW) -> np.ndarray:
        """Centered moving average; edges use the available samples"""
        return pd.Series(series).rolling(window, center=True, min_periods=1).mean().to_numpy()

    def baseline_power(self, population: Population, n_steps: int,
                       uncontrolled: Optional[np.ndarray] = None,
                       door_duty: Optional[np.ndarray] = None,
                       window: int = BASELINE_WINDOW) -> np.ndarray:
        """
        Smoothed baseline P_b for every step

        Args:
            population: sampled population
            n_steps: run length
            uncontrolled: aggregate power of an uncontrolled run, if available
            door_duty: extra duty cycle from door openings per step (closed form only)
            window: smoothing window, s

        Returns:
            np.ndarray: baseline power per step, W
        """
        if uncontrolled is not None:
            return self.smooth_baseline(np.asarray(uncontrolled, dtype=float)[:n_steps], window)
        baseline = np.full(n_steps, self.closed_form_baseline(population))
        if door_duty is not None:
            profile = np.resize(np.asarray(door_duty, dtype=float), n_steps)
            baseline = baseline + population.size * population.mean_power * profile
        return baseline

    def get_agent_status(self) -> dict:
        return {
            'name': self.name,
            'status': 'active',
            'capabilities': ['sample_population', 'aggregate_power', 'baseline_power', 'lock_cdf'],
            'ready': True
        }
