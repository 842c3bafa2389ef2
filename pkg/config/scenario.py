"""Scenario file schema (JSON validated with pydantic)"""

import json
import logging
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import settings

logger = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be loaded or validated"""


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class UniformDist(_Section):
    low: float
    high: float

    @model_validator(mode="after")
    def _ordered(self):
        if self.low > self.high:
            raise ValueError(f"uniform low {self.low} exceeds high {self.high}")
        return self


class NormalDist(_Section):
    mean: float
    std: float = Field(ge=0.0)


def _uniform(bounds) -> UniformDist:
    return UniformDist(low=bounds[0], high=bounds[1])


def _normal(moments) -> NormalDist:
    return NormalDist(mean=moments[0], std=moments[1])


class PopulationSpec(_Section):
    """Parameter distributions of the refrigerator population"""

    size: int = settings.POPULATION_SIZE
    ambient: UniformDist = _uniform(settings.AMBIENT_RANGE)
    deadband: UniformDist = _uniform(settings.DEADBAND_RANGE)
    setpoint: UniformDist = _uniform(settings.SETPOINT_RANGE)
    alpha: UniformDist = _uniform(settings.ALPHA_RANGE)
    nominal_power: UniformDist = _uniform(settings.POWER_RANGE)
    peak_factor: NormalDist = _normal(settings.PEAK_FACTOR)
    startup_duration: NormalDist = _normal(settings.STARTUP_DURATION)
    lock_on: NormalDist = _normal(settings.LOCK_ON)
    lock_off: NormalDist = _normal(settings.LOCK_OFF)
    beta: NormalDist = _normal(settings.BETA)
    cop: float = Field(default=settings.DEFAULT_COP, gt=0.0)
    door_resistance_ratio: float = Field(default=settings.DOOR_RESISTANCE_RATIO, gt=1.0)
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _physical(self):
        for label in ("ambient", "deadband", "alpha", "nominal_power"):
            if getattr(self, label).low <= 0:
                raise ValueError(f"{label} distribution must have a positive support")
        if self.startup_duration.mean <= 0:
            raise ValueError("startup_duration mean must be positive")
        if self.beta.mean <= 0:
            raise ValueError("beta mean must be positive")
        return self


class ControllerConfig(_Section):
    """Gains and switches of the decentralized frequency controller"""

    mode: Literal["proposed", "simple1", "simple2"] = "proposed"
    nominal_duty: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    reserve_duty: float = Field(default=settings.RESERVE_DUTY, ge=0.0, lt=1.0)
    df_max: float = Field(default=settings.DF_MAX, gt=0.0)
    corrective_gain: float = Field(default=settings.CORRECTIVE_GAIN, ge=0.0, le=1.0)
    resolution: float = Field(default=0.0, ge=0.0)
    deviation_bound: Optional[float] = Field(default=None, gt=0.0)
    deadband: float = Field(default=settings.DEADBAND_HZ, ge=0.0)
    filter_window: int = Field(default=1, ge=1)
    resync_interval: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _reserve_fits(self):
        if self.nominal_duty is not None:
            limit = min(self.nominal_duty, 1.0 - self.nominal_duty)
            if self.reserve_duty > limit:
                raise ValueError(
                    f"reserve_duty {self.reserve_duty} exceeds min(Dn, 1-Dn) = {limit:.4f}"
                )
        return self


class DoorModel(_Section):
    """Door-opening statistics for one refrigerator-day"""

    openings: NormalDist = _normal(settings.DOOR_OPENINGS_PER_DAY)
    duration: NormalDist = _normal(settings.DOOR_DURATION)
    energy_uplift: float = Field(default=settings.DOOR_ENERGY_UPLIFT, ge=0.0)
    hourly_profile: List[float] = Field(default_factory=lambda: list(settings.DOOR_HOURLY_PROFILE))
    duty_profile_ensemble: int = Field(default=1, ge=1)
    smoothing_window: int = Field(default=settings.BASELINE_WINDOW, ge=1)

    @field_validator("hourly_profile")
    @classmethod
    def _profile(cls, value: List[float]) -> List[float]:
        if len(value) != 24:
            raise ValueError(f"hourly_profile needs 24 values, got {len(value)}")
        if any(w < 0 for w in value):
            raise ValueError("hourly_profile weights must be non-negative")
        if abs(sum(value) - 1.0) > 1e-6:
            raise ValueError(f"hourly_profile must sum to 1, got {sum(value):.6f}")
        return value

    @model_validator(mode="after")
    def _positive(self):
        if self.openings.mean <= 0 or self.duration.mean <= 0:
            raise ValueError("door opening count and duration means must be positive")
        return self


class FrequencySource(_Section):
    """Where the 1 Hz frequency deviation comes from"""

    kind: Literal["file", "step", "noise", "class", "constant", "bias_day"] = "class"
    path: Optional[str] = None
    delta: float = 0.0                      # step height / constant value, Hz
    event_duration: Optional[int] = None    # step length, s
    bias: float = 0.0
    sigma: float = Field(default=settings.SIGNAL_SIGMA, ge=0.0)
    half_period: float = Field(default=settings.SIGNAL_HALF_PERIOD, gt=0.0)
    signal_class: Literal["zero_mean", "small_bias", "large_bias"] = "zero_mean"
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _file_exists(self):
        if self.kind == "file":
            if not self.path:
                raise ValueError("frequency.kind 'file' needs a path")
            if not Path(self.path).is_file():
                raise ValueError(f"frequency file not found: {self.path}")
        return self


class BaselineConfig(_Section):
    mode: Literal["simulated", "closed_form"] = "simulated"
    window: int = Field(default=settings.BASELINE_WINDOW, ge=1)


class OutputConfig(_Section):
    directory: Optional[str] = None
    per_step_csv: bool = True
    metrics_json: bool = True
    downsample: Optional[int] = Field(default=None, ge=1)


class Scenario(_Section):
    """A complete, reproducible simulation run"""

    name: str = "scenario"
    seed: int = settings.DEFAULT_SEED
    duration: int = Field(default=settings.DAY_SECONDS, ge=1)
    threads: int = Field(default=settings.THREADS, ge=1)
    verbose: bool = False
    population: PopulationSpec = PopulationSpec()
    controller: ControllerConfig = ControllerConfig()
    frequency: FrequencySource = FrequencySource()
    doors: Optional[DoorModel] = None
    baseline: BaselineConfig = BaselineConfig()
    outputs: OutputConfig = OutputConfig()

    @property
    def population_seed(self) -> int:
        return self.seed if self.population.seed is None else self.population.seed


def load_scenario(path: Union[str, Path]) -> Scenario:
    """
    Load and validate a scenario file

    Args:
        path: JSON scenario file

    Returns:
        Scenario: validated scenario
    """
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    try:
        scenario = Scenario.model_validate(raw)
    except ValidationError as e:
        raise ScenarioError(f"{path}: {e}") from e
    logger.info(f"✓ Scenario '{scenario.name}' loaded from {path}")
    return scenario


def scenario_from_dict(raw: dict) -> Scenario:
    try:
        return Scenario.model_validate(raw)
    except ValidationError as e:
        raise ScenarioError(str(e)) from e


# Sweep axes and the scenario field each one drives
SWEEP_AXES = ("N_r", "D_r", "u", "t_on_l", "K_c", "dT_res", "doors")


def apply_override(scenario: Scenario, axis: str, value) -> Scenario:
    """Return a copy of the scenario with one sweep axis set to value"""
    raw = scenario.model_dump()
    if axis == "N_r":
        raw["population"]["size"] = int(value)
    elif axis == "D_r":
        raw["controller"]["reserve_duty"] = float(value)
    elif axis == "u":
        raw["population"]["peak_factor"] = {"mean": float(value), "std": 0.1 * float(value)}
    elif axis == "t_on_l":
        raw["population"]["lock_on"] = {"mean": float(value), "std": float(value) / 12.0}
    elif axis == "K_c":
        raw["controller"]["corrective_gain"] = float(value)
    elif axis == "dT_res":
        raw["controller"]["resolution"] = float(value)
    elif axis == "doors":
        if isinstance(value, (bool, int, float)):
            enabled = bool(float(value))
        else:
            enabled = str(value).strip().lower() in ("1", "1.0", "true", "on", "yes")
        if not enabled:
            raw["doors"] = None
        elif raw.get("doors") is None:
            raw["doors"] = DoorModel().model_dump()
    else:
        raise ScenarioError(f"unknown sweep axis '{axis}' (choose from {', '.join(SWEEP_AXES)})")
    return scenario_from_dict(raw)
