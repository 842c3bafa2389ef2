"""Controller Agent - the decentralized probabilistic frequency controller"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from agents.population_agent import Population
from config.scenario import ControllerConfig
from config.settings import CONTROLLABILITY_LIMIT, DIAGNOSTIC_LOG_EVERY, TIME_STEP
from memory.estimator_memory import ActivationHistory, EstimatorState
from tools.thermal import InfeasibleCycleError, ThermalParams, cycle_durations, temperature_rates

logger = logging.getLogger(__name__)


# ============================================================================
# PURE CONTROL LAW
# ============================================================================

def desired_duty(delta_f: float, nominal_duty: float, reserve_duty: float, df_max: float) -> float:
    """Dn + D^r * delta_f / df_max, saturated at full activation"""
    return nominal_duty + reserve_duty * min(1.0, max(-1.0, delta_f / df_max))


def benchmark_probability(duty_change: float, previous_desired: float) -> float:
    """Switching probability of the simple controllers, from the desired duty alone"""
    if duty_change == 0:
        return 0.0
    if duty_change > 0:
        room = 1.0 - previous_desired
        if room <= 0:
            logger.warning(f"Degenerate switch-on denominator 1 - D^d = {room:.4g}; probability set to 1")
            return 1.0
        return min(1.0, duty_change / room)
    if previous_desired <= 0:
        logger.warning(f"Degenerate switch-off denominator D^d = {previous_desired:.4g}; probability set to 1")
        return 1.0
    return min(1.0, -duty_change / previous_desired)


def switch_fraction(desired: float, activated_prev: float, startup_backlog: float, mean_peak: float) -> float:
    """
    Fraction of the population to switch this step.

    startup_backlog is the remaining startup overshoot of earlier switches,
    sum_i x_i * S_u(t - i). Switching off has no startup dynamics, so the
    divisor only applies to a non-negative bracket.
    """
    bracket = desired - activated_prev - startup_backlog
    if bracket >= 0:
        return bracket / (1.0 + mean_peak)
    return bracket


def switching_probability(x: float, actual_prev: float, lock_on: float, lock_off: float):
    """
    Probability for each eligible device, and whether it saturated

    Returns:
        tuple: (rho, saturated)
    """
    if x == 0:
        return 0.0, False
    if x > 0:
        room = 1.0 - actual_prev - lock_off
        rho = x / room if room > 0 else math.inf
    else:
        room = actual_prev - lock_on
        rho = -x / room if room > 0 else math.inf
    if rho > 1.0:
        return 1.0, True
    return rho, False


def corrective_limit_update(reset_factor: float, corrective_gain: float,
                            mean_temp_prev: float, nominal_temp: float) -> float:
    """Delta T_lim = K_r - K_c * (mean T - nominal T)"""
    return reset_factor - corrective_gain * (mean_temp_prev - nominal_temp)


def resolution_probability(limit_shift: float, resolution: float) -> float:
    """Share of devices that take a full resolution step this second"""
    if resolution <= 0:
        return 1.0
    return min(1.0, abs(limit_shift) / resolution)


# ============================================================================
# POPULATION-DERIVED CONSTANTS
# ============================================================================

@dataclass(frozen=True)
class ControllerConstants:
    """Population statistics every device is programmed with"""

    nominal_duty: float
    mean_params: ThermalParams
    nominal_temp: float
    startup_profile: np.ndarray   # S_u(j) for lags j = 0..window
    cdf_on: np.ndarray            # F_on(j), 1 beyond the horizon
    cdf_off: np.ndarray
    window: int
    door_duty: Optional[np.ndarray] = None

    @property
    def survival_on(self) -> np.ndarray:
        return 1.0 - self.cdf_on

    @property
    def survival_off(self) -> np.ndarray:
        return 1.0 - self.cdf_off

    @classmethod
    def from_population(cls, population: Population, nominal_duty: Optional[float] = None,
                        door_duty: Optional[np.ndarray] = None) -> "ControllerConstants":
        mean_params = population.mean_params()
        startup = population.mean_startup_duration
        window = max(int(math.ceil(startup)), population.lock_on_horizon, population.lock_off_horizon) + 1
        lags = np.arange(window + 1)
        profile = population.mean_peak_factor * np.clip(1.0 - lags / startup, 0.0, None)
        return cls(
            nominal_duty=population.nominal_duty if nominal_duty is None else nominal_duty,
            mean_params=mean_params,
            nominal_temp=population.nominal_temp,
            startup_profile=profile,
            cdf_on=population.lock_cdf("on", window),
            cdf_off=population.lock_cdf("off", window),
            window=window,
            door_duty=None if door_duty is None else np.asarray(door_duty, dtype=float),
        )

    def door_term(self, step: int) -> float:
        if self.door_duty is None or not len(self.door_duty):
            return 0.0
        return float(self.door_duty[step % len(self.door_duty)])

    def expected_cycle(self, mean_temp: float):
        """Expected (t_on, t_off) of a mean device whose deadband is centred on mean_temp"""
        half = 0.5 * self.mean_params.deadband_width
        t_on, t_off, _ = cycle_durations(self.mean_params, mean_temp - half, mean_temp + half)
        return float(t_on), float(t_off)


@dataclass(frozen=True)
class StepOutput:
    """What the estimator hands to the device phase for one step"""

    step: int
    desired_duty: float
    switch_fraction: float
    probability: float
    direction: int
    reset_factor: float
    limit_shift: float
    shift_probability: float
    band_reference: float
    lock_on: float
    lock_off: float
    actual_duty: float
    mean_temp: float


@dataclass
class SwitchDecision:
    """Device-phase outcome for a block of devices"""

    action: np.ndarray         # +1 switch on, -1 switch off, 0 none
    limit_shift: np.ndarray    # degC applied to both limits this step
    probability: float


# ============================================================================
# AGENT
# ============================================================================

class ControllerAgent:
    """
    Runs the estimator recursion that every refrigerator evaluates
    identically, and turns its output into per-device random decisions
    """

    def __init__(self, config: ControllerConfig, constants: ControllerConstants):
        self.name = "ControllerAgent"
        self.config = config
        self.constants = constants
        limit = min(constants.nominal_duty, 1.0 - constants.nominal_duty)
        if config.reserve_duty > limit + 1e-12:
            raise ValueError(f"reserve duty {config.reserve_duty} exceeds min(Dn, 1-Dn) = {limit:.4f}")
        self.diagnostics = {'saturation_events': 0, 'controllability_warnings': 0,
                            'degenerate_benchmark': 0, 'infeasible_cycle_estimates': 0}
        self._last_warning = {}
        self.state = self._initial_state()
        logger.info(f"✓ {self.name} initialized (mode={config.mode}, Dn={constants.nominal_duty:.4f}, "
                    f"D^r={config.reserve_duty}, K_c={config.corrective_gain:g}, window={constants.window})")

    @classmethod
    def from_population(cls, config: ControllerConfig, population: Population,
                        door_duty: Optional[np.ndarray] = None) -> "ControllerAgent":
        constants = ControllerConstants.from_population(population, config.nominal_duty, door_duty)
        return cls(config, constants)

    def _initial_state(self) -> EstimatorState:
        c = self.constants
        cycle = c.expected_cycle(c.nominal_temp)
        cycle_duty = cycle[0] / (cycle[0] + cycle[1])
        state = EstimatorState(
            desired_duty=c.nominal_duty,
            actual_duty=c.nominal_duty + c.door_term(0),
            activated_duty=c.nominal_duty,
            mean_temp=c.nominal_temp,
            nominal_temp=c.nominal_temp,
            baseline_duty=cycle_duty + c.door_term(0),
            history=ActivationHistory(c.window),
            cycle_duty=cycle_duty,
            realized_duty=cycle_duty,
            cycle=cycle,
        )
        state.lock_on, state.lock_off = self._steady_locks(cycle)
        return state

    def _steady_locks(self, cycle):
        period = cycle[0] + cycle[1]
        return (self.constants.mean_params.lock_on / period,
                self.constants.mean_params.lock_off / period)

    def _warn(self, key: str, message: str):
        self.diagnostics[key] += 1
        step = self.state.step
        if step - self._last_warning.get(key, -DIAGNOSTIC_LOG_EVERY) >= DIAGNOSTIC_LOG_EVERY:
            logger.warning(f"[{self.name}] step {step}: {message}")
            self._last_warning[key] = step

    # ------------------------------------------------------------------
    # estimator phase (serial)
    # ------------------------------------------------------------------

    def lock_fractions(self):
        """
        Locked-on and locked-off fractions at the current step

        Returns:
            tuple: (L_on, L_off, steady L_on, steady L_off)
        """
        c, s = self.constants, self.state
        steady_on, steady_off = self._steady_locks(s.cycle)
        transient_on, transient_off = s.history.gated(c.survival_on, c.survival_off)
        s.lock_on_transient, s.lock_off_transient = transient_on, transient_off
        lock_on = steady_on + transient_on
        lock_off = steady_off + transient_off
        if lock_on + lock_off >= CONTROLLABILITY_LIMIT:
            self._warn('controllability_warnings',
                       f"locked fraction {lock_on + lock_off:.3f} >= {CONTROLLABILITY_LIMIT}; controllability lost")
        return lock_on, lock_off, steady_on, steady_off

    def resetting_factor(self, x: float, lock_on: float, lock_off: float,
                         steady_on: float, steady_off: float) -> float:
        """
        Common limit shift that holds the activated power, degC per step.

        Activations older than the history window have F = 1, so their
        terms reduce to x_k * (dT_on - dT_off) = -x_k * beta*P_n and are
        carried by the history's settled sum.

        Inside a lock window the terms differ from the settled rate. That
        excess is booked into the lock residue and paid back at 1/window
        per step, so a switch that is later reversed leaves the limits
        where the energy balance puts them.
        """
        c, s = self.constants, self.state
        mp = c.mean_params
        heating, cooling = temperature_rates(mp.alpha, mp.ambient, mp.cooling_rate, s.mean_temp)
        past = s.history.past
        f_on = c.cdf_on[1:c.window + 1]
        f_off = c.cdf_off[1:c.window + 1]
        terms = np.where(past >= 0, past * (cooling * f_on - heating), past * (cooling - heating * f_off))
        if x >= 0:
            current = x * (cooling * c.cdf_on[0] - heating)
        else:
            current = x * (cooling - heating * c.cdf_off[0])
        settled_rate = cooling - heating
        excess = float(np.sum(terms)) + current - (float(np.sum(past)) + x) * settled_rate
        payback = s.lock_residue / c.window
        s.lock_residue += excess - payback
        total = (s.history.total + x) * settled_rate + excess - payback

        free = 1.0 - lock_on - lock_off
        if free <= 0:
            self._warn('controllability_warnings', "no unlocked devices left to shift limits")
            return 0.0
        normalization = (1.0 - steady_on - steady_off) / free
        return normalization * TIME_STEP * total

    def step(self, delta_f: float) -> StepOutput:
        """
        Advance the estimator by one second

        Args:
            delta_f: deadbanded (and optionally filtered) frequency deviation, Hz

        Returns:
            StepOutput: switching and limit-shift instructions for this step
        """
        cfg, c, s = self.config, self.constants, self.state
        mp = c.mean_params
        desired = desired_duty(delta_f, c.nominal_duty, cfg.reserve_duty, cfg.df_max)
        lock_on, lock_off, steady_on, steady_off = self.lock_fractions()

        if cfg.mode == "proposed":
            backlog = s.history.weighted(c.startup_profile)
            # the baseline shift the population has not realized yet still counts as activation
            pending = s.realized_duty - s.cycle_duty
            x = switch_fraction(desired, s.activated_duty + pending, backlog, mp.peak_factor)
            rho, saturated = switching_probability(x, s.actual_duty, lock_on, lock_off)
            if saturated:
                self._warn('saturation_events', f"switching probability clamped to 1 (x={x:.5f})")
            reset = self.resetting_factor(x, lock_on, lock_off, steady_on, steady_off)
            limit_shift = corrective_limit_update(reset, cfg.corrective_gain, s.mean_temp, s.nominal_temp)
        else:
            x = desired - s.desired_duty
            if x != 0 and not (0 < s.desired_duty < 1):
                self.diagnostics['degenerate_benchmark'] += 1
            rho = benchmark_probability(x, s.desired_duty)
            if cfg.mode == "simple1":
                reset = -(desired - c.nominal_duty) * TIME_STEP * mp.cooling_rate
            else:
                reset = 0.0
            limit_shift = reset

        band_reference = s.mean_temp - s.nominal_temp
        direction = 1 if x > 0 else (-1 if x < 0 else 0)

        # mean-temperature estimate and baseline duty follow the limits of unlocked devices
        s.mean_temp += limit_shift * (1.0 - lock_on - lock_off)
        s.cumulative_shift += limit_shift
        try:
            s.cycle = c.expected_cycle(s.mean_temp)
        except InfeasibleCycleError:
            self._warn('infeasible_cycle_estimates', f"cycle estimate undefined at mean T {s.mean_temp:.3f}")
        s.cycle_duty = s.cycle[0] / (s.cycle[0] + s.cycle[1])
        # the population settles into a new cycle duty within about one cycle period
        s.realized_duty += (s.cycle_duty - s.realized_duty) * TIME_STEP / (s.cycle[0] + s.cycle[1])
        baseline = s.realized_duty + c.door_term(s.step + 1)

        s.history.push(x)
        s.activated_duty += x
        s.actual_duty = min(1.0, max(0.0, s.actual_duty + x + (baseline - s.baseline_duty)))
        s.baseline_duty = baseline
        s.desired_duty = desired
        s.lock_on, s.lock_off = lock_on, lock_off
        s.step += 1

        out = StepOutput(
            step=s.step - 1,
            desired_duty=desired,
            switch_fraction=x,
            probability=rho,
            direction=direction,
            reset_factor=reset,
            limit_shift=limit_shift,
            shift_probability=resolution_probability(limit_shift, cfg.resolution),
            band_reference=band_reference,
            lock_on=lock_on,
            lock_off=lock_off,
            actual_duty=s.actual_duty,
            mean_temp=s.mean_temp,
        )
        logger.debug(f"[{self.name}] t={out.step} x={x:.6f} rho={rho:.6f} K_r={reset:.3e} "
                     f"L_on={lock_on:.4f} L_off={lock_off:.4f}")
        return out

    def resync(self, true_mean: float, true_nominal: float):
        """Reset the mean-temperature estimate from a measured population mean"""
        s = self.state
        s.mean_temp = s.nominal_temp + (true_mean - true_nominal)
        logger.info(f"[{self.name}] ✓ Estimator resynced at step {s.step}: mean T {s.mean_temp:.3f}")

    # ------------------------------------------------------------------
    # device phase (parallel over blocks)
    # ------------------------------------------------------------------

    def device_decision(self, out: StepOutput, on_state: np.ndarray, unlocked: np.ndarray,
                        draws: np.ndarray) -> np.ndarray:
        """
        Controller-initiated switches for a block of devices

        Args:
            out: this step's estimator output
            on_state: boolean on/off states
            unlocked: devices whose lock timer has expired
            draws: one uniform number per device

        Returns:
            np.ndarray: +1 switch on, -1 switch off, 0 keep
        """
        action = np.zeros(on_state.shape, dtype=np.int8)
        if out.direction == 0 or out.probability <= 0:
            return action
        hit = unlocked & (draws < out.probability)
        if out.direction > 0:
            action[hit & ~on_state] = 1
        else:
            action[hit & on_state] = -1
        return action

    def resolution_randomized_limits(self, out: StepOutput, unlocked: np.ndarray,
                                     cumulative_shift: np.ndarray, draws: np.ndarray) -> np.ndarray:
        """
        Limit shift per device for this step, degC

        Without a thermostat resolution every unlocked device takes the exact
        shift. Otherwise a random share |dT|/dT_res takes one full resolution
        step, and with a deviation bound a device only moves while its
        cumulative shift stays within the bound of the estimated mean shift.
        """
        cfg = self.config
        if out.limit_shift == 0:
            return np.zeros(unlocked.shape)
        if cfg.resolution <= 0:
            return np.where(unlocked, out.limit_shift, 0.0)
        step = math.copysign(cfg.resolution, out.limit_shift)
        moving = unlocked & (draws < out.shift_probability)
        if cfg.deviation_bound is not None:
            moving &= np.abs(cumulative_shift + step - out.band_reference) <= cfg.deviation_bound
        return np.where(moving, step, 0.0)

    def decide(self, out: StepOutput, on_state: np.ndarray, unlocked: np.ndarray,
               cumulative_shift: np.ndarray, switch_draws: np.ndarray,
               shift_draws: np.ndarray) -> SwitchDecision:
        return SwitchDecision(
            action=self.device_decision(out, on_state, unlocked, switch_draws),
            limit_shift=self.resolution_randomized_limits(out, unlocked, cumulative_shift, shift_draws),
            probability=out.probability,
        )

    def get_agent_status(self) -> dict:
        return {
            'name': self.name,
            'status': 'active',
            'mode': self.config.mode,
            'step': self.state.step,
            'capabilities': ['desired_duty', 'switch_fraction', 'lock_fractions', 'switching_probability',
                             'resetting_factor', 'corrective_limit_update', 'resolution_randomized_limits',
                             'device_decision'],
            'diagnostics': dict(self.diagnostics),
            'ready': True
        }
