"""Refrigerator thermal model: exact RC step, hysteresis thermostat, startup power"""

import logging
from dataclasses import dataclass, field, fields, replace
from typing import Tuple, Union

import numpy as np

from config.settings import TIME_STEP

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class ThermalParamsError(ValueError):
    """Physical parameters violate a model invariant"""


class InfeasibleCycleError(ValueError):
    """Cycle durations undefined: a log argument is non-positive"""


def _scalar_like(value, template):
    if np.ndim(template) == 0 and np.ndim(value) == 0:
        return value.item() if isinstance(value, np.ndarray) else value
    return value


@dataclass(frozen=True)
class ThermalParams:
    """
    Physical parameters of one refrigerator, or of a whole population when
    every field holds an array of equal length.

    Units: alpha 1/s, beta degC/J, R and R_op degC/W, temperatures degC,
    nominal_power W, durations s.
    """

    alpha: ArrayLike
    beta: ArrayLike
    thermal_resistance: ArrayLike
    door_open_resistance: ArrayLike
    ambient: ArrayLike
    nominal_power: ArrayLike
    cop: ArrayLike
    peak_factor: ArrayLike
    startup_duration: ArrayLike
    lock_on: ArrayLike
    lock_off: ArrayLike
    deadband_width: ArrayLike
    setpoint: ArrayLike

    @classmethod
    def from_rates(cls, alpha, beta, ambient, nominal_power, setpoint, deadband_width,
                   cop=2.0, door_resistance_ratio=25.0, peak_factor=0.25,
                   startup_duration=30.0, lock_on=60.0, lock_off=189.0) -> "ThermalParams":
        """Build parameters from alpha and beta; C = cop/beta and R = 1/(alpha*C)"""
        capacitance = np.divide(cop, beta)
        resistance = 1.0 / (np.multiply(alpha, capacitance))
        return cls(
            alpha=alpha,
            beta=beta,
            thermal_resistance=_scalar_like(resistance, alpha),
            door_open_resistance=_scalar_like(resistance / door_resistance_ratio, alpha),
            ambient=ambient,
            nominal_power=nominal_power,
            cop=cop,
            peak_factor=peak_factor,
            startup_duration=startup_duration,
            lock_on=lock_on,
            lock_off=lock_off,
            deadband_width=deadband_width,
            setpoint=setpoint,
        )

    @property
    def capacitance(self) -> ArrayLike:
        return np.divide(self.cop, self.beta)

    @property
    def cooling_rate(self) -> ArrayLike:
        """beta * P_n, degC/s"""
        return np.multiply(self.beta, self.nominal_power)

    @property
    def cooling_reach(self) -> ArrayLike:
        """eta * R * P_n = beta * P_n / alpha, degC"""
        return np.divide(self.cooling_rate, self.alpha)

    @property
    def door_alpha(self) -> ArrayLike:
        return np.multiply(self.alpha, np.divide(self.thermal_resistance, self.door_open_resistance))

    @property
    def initial_t_min(self) -> ArrayLike:
        return np.subtract(self.setpoint, np.multiply(0.5, self.deadband_width))

    @property
    def initial_t_max(self) -> ArrayLike:
        return np.add(self.setpoint, np.multiply(0.5, self.deadband_width))

    def __len__(self) -> int:
        return int(np.size(self.alpha))

    def select(self, index) -> "ThermalParams":
        """Parameters of the devices at index (int or array of ints)"""
        values = {}
        for f in fields(self):
            value = getattr(self, f.name)
            values[f.name] = np.asarray(value)[index] if np.ndim(value) else value
        return ThermalParams(**values)

    def validate(self) -> "ThermalParams":
        checks = [
            (np.all(np.asarray(self.alpha) > 0), "alpha must be positive"),
            (np.all(np.asarray(self.beta) > 0), "beta must be positive"),
            (np.all(np.asarray(self.nominal_power) > 0), "nominal power must be positive"),
            (np.all(np.asarray(self.peak_factor) >= 0), "peak factor must be non-negative"),
            (np.all(np.asarray(self.startup_duration) > 0), "startup duration must be positive"),
            (np.all(np.asarray(self.deadband_width) > 0), "deadband width must be positive"),
            (np.all(np.asarray(self.lock_on) >= 0), "lock_on must be non-negative"),
            (np.all(np.asarray(self.lock_off) >= 0), "lock_off must be non-negative"),
            (np.all((np.asarray(self.door_open_resistance) > 0)
                    & (np.asarray(self.door_open_resistance) < np.asarray(self.thermal_resistance))),
             "door-open resistance must lie in (0, R)"),
            (np.all(np.asarray(self.cooling_reach) > np.subtract(self.ambient, self.initial_t_min)),
             "compressor cannot cool below the lower limit (eta*R*P_n <= T_a - T_min)"),
        ]
        for ok, message in checks:
            if not ok:
                raise ThermalParamsError(message)
        return self


@dataclass
class DeviceState:
    """Dynamic state of one refrigerator or, with array fields, a population"""

    temperature: ArrayLike
    on_state: ArrayLike
    t_min: ArrayLike
    t_max: ArrayLike
    time_since_switch: ArrayLike = 0.0
    door_open: ArrayLike = False
    seconds_since_on: ArrayLike = 0.0
    limit_shift: ArrayLike = field(default=0.0)

    @classmethod
    def at_setpoint(cls, params: ThermalParams, on: bool = False) -> "DeviceState":
        return cls(
            temperature=params.setpoint,
            on_state=on,
            t_min=params.initial_t_min,
            t_max=params.initial_t_max,
            time_since_switch=0.0,
            door_open=False,
            seconds_since_on=np.inf if not on else 0.0,
        )

    def copy(self) -> "DeviceState":
        return DeviceState(**{f.name: np.copy(getattr(self, f.name)) if np.ndim(getattr(self, f.name))
                              else getattr(self, f.name) for f in fields(self)})


def temperature_after(temperature: ArrayLike, on_state: ArrayLike, params: ThermalParams,
                      elapsed: float, door_open: ArrayLike = False) -> ArrayLike:
    """
    Exact solution of dT/dt = a*(T_a - T) - m*beta*P_n over `elapsed` seconds
    with m and the door held constant; a = alpha, or the door-open alpha.
    """
    a = np.where(door_open, params.door_alpha, params.alpha)
    settle = np.subtract(params.ambient, np.asarray(on_state, dtype=float) * params.cooling_rate / a)
    result = settle + (np.subtract(temperature, settle)) * np.exp(-a * elapsed)
    return _scalar_like(result, temperature)


def step_temperature(state: DeviceState, params: ThermalParams, dt: float = TIME_STEP) -> DeviceState:
    """Advance the temperature one step; the on/off state is left unchanged"""
    temperature = temperature_after(state.temperature, state.on_state, params, dt, state.door_open)
    return replace(state, temperature=temperature)


def thermostat_masks(temperature, on_state, t_min, t_max) -> Tuple[np.ndarray, np.ndarray]:
    """(turn_on, turn_off) masks of the mandatory hysteresis switches"""
    on = np.asarray(on_state, dtype=bool)
    turn_on = ~on & (np.asarray(temperature) >= t_max)
    turn_off = on & (np.asarray(temperature) <= t_min)
    return turn_on, turn_off


def hysteresis_switch(state: DeviceState) -> DeviceState:
    """Apply the thermostat's limit crossings; lock timers do not apply here"""
    turn_on, turn_off = thermostat_masks(state.temperature, state.on_state, state.t_min, state.t_max)
    on = (np.asarray(state.on_state, dtype=bool) | turn_on) & ~turn_off
    switched = turn_on | turn_off
    return replace(
        state,
        on_state=_scalar_like(on, state.on_state),
        time_since_switch=_scalar_like(np.where(switched, 0.0, state.time_since_switch), state.time_since_switch),
        seconds_since_on=_scalar_like(np.where(turn_on, 0.0, state.seconds_since_on), state.seconds_since_on),
    )


def cycle_durations(params: ThermalParams, t_min: ArrayLike, t_max: ArrayLike):
    """
    Closed-form on and off durations of an uncontrolled cycle

    Args:
        params: thermal parameters (alpha, beta, P_n, T_a are used)
        t_min: lower hysteresis limit, degC
        t_max: upper hysteresis limit, degC

    Returns:
        tuple: (t_on, t_off, duty)
    """
    reach = params.cooling_reach
    on_num = np.subtract(t_max, params.ambient) + reach
    on_den = np.subtract(t_min, params.ambient) + reach
    off_num = np.subtract(params.ambient, t_min)
    off_den = np.subtract(params.ambient, t_max)
    if np.any(on_den <= 0) or np.any(off_den <= 0):
        raise InfeasibleCycleError(
            "cycle undefined: need T_a > T_max and T_min - T_a + eta*R*P_n > 0"
        )
    rc = 1.0 / np.asarray(params.alpha, dtype=float)
    t_on = rc * np.log(on_num / on_den)
    t_off = rc * np.log(off_num / off_den)
    total = t_on + t_off
    with np.errstate(invalid="ignore", divide="ignore"):
        duty = np.where(total > 0, t_on / np.where(total > 0, total, 1.0), off_num / reach)
    return (_scalar_like(t_on, t_min), _scalar_like(t_off, t_min), _scalar_like(duty, t_min))


def startup_power(params: ThermalParams, seconds_since_on: ArrayLike) -> ArrayLike:
    """P_n * (1 + u * [1 - t/N_s]_+)"""
    decay = np.clip(1.0 - np.divide(seconds_since_on, params.startup_duration), 0.0, None)
    power = np.multiply(params.nominal_power, 1.0 + np.multiply(params.peak_factor, decay))
    return _scalar_like(power, seconds_since_on)


def temperature_rates(alpha: float, ambient: float, cooling_rate: float, temperature: float) -> Tuple[float, float]:
    """(heating rate of an off device, cooling rate of an on device) at temperature, degC/s"""
    heating = alpha * (ambient - temperature)
    return heating, heating - cooling_rate
