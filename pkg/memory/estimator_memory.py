"""Estimator memory - activation history and the replicated controller state"""

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


class ActivationHistory:
    """
    Fixed-length memory of past switch fractions x_k.

    past[j-1] holds x_{t-j} for lags j = 1..window. Activations older than
    the window only ever enter the controller through their plain sum (all
    startup transients are over and every lock has expired), so they are
    folded into `settled` when they leave the buffer.
    """

    def __init__(self, window: int):
        if window < 1:
            raise ValueError(f"history window must be >= 1, got {window}")
        self.name = "ActivationHistory"
        self.window = int(window)
        self.past = np.zeros(self.window)
        self.settled = 0.0
        logger.debug(f"✓ {self.name} initialized with window {self.window}")

    def push(self, x: float):
        self.settled += self.past[-1]
        self.past[1:] = self.past[:-1]
        self.past[0] = x

    def weighted(self, kernel: np.ndarray) -> float:
        """sum_j x_{t-j} * kernel[j] over lags 1..window (kernel indexed by lag)"""
        return float(np.dot(self.past, kernel[1:self.window + 1]))

    def gated(self, kernel_on: np.ndarray, kernel_off: np.ndarray):
        """
        Sign-gated convolutions: positive activations against kernel_on,
        magnitudes of negative activations against kernel_off.
        """
        positive = self.past >= 0
        on = float(np.dot(np.where(positive, self.past, 0.0), kernel_on[1:self.window + 1]))
        off = float(np.dot(np.where(positive, 0.0, -self.past), kernel_off[1:self.window + 1]))
        return on, off

    @property
    def total(self) -> float:
        return self.settled + float(np.sum(self.past))

    def copy(self) -> "ActivationHistory":
        clone = ActivationHistory(self.window)
        clone.past = self.past.copy()
        clone.settled = self.settled
        return clone


@dataclass
class EstimatorState:
    """
    Controller state every device computes identically from the common
    frequency stream.

    actual_duty (D^a) follows the realized baseline drift and the door
    trend; activated_duty is the part steered by the controller alone.
    cycle_duty is the mean-device duty at the estimated mean temperature,
    realized_duty the share of it the population has settled into so far.
    lock_residue holds limit shift taken during lock transients that the
    settled terms have not yet paid back.
    """

    desired_duty: float
    actual_duty: float
    activated_duty: float
    mean_temp: float
    nominal_temp: float
    baseline_duty: float
    history: ActivationHistory
    cycle_duty: float = 0.0
    realized_duty: float = 0.0
    lock_residue: float = 0.0
    lock_on: float = 0.0
    lock_off: float = 0.0
    lock_on_transient: float = 0.0
    lock_off_transient: float = 0.0
    cumulative_shift: float = 0.0
    step: int = 0
    cycle: tuple = field(default=(float("nan"), float("nan")))

    def snapshot(self) -> dict:
        """Plain values for persistence and replication checks"""
        return {
            'step': self.step,
            'desired_duty': self.desired_duty,
            'actual_duty': self.actual_duty,
            'activated_duty': self.activated_duty,
            'mean_temp': self.mean_temp,
            'nominal_temp': self.nominal_temp,
            'baseline_duty': self.baseline_duty,
            'cycle_duty': self.cycle_duty,
            'realized_duty': self.realized_duty,
            'lock_residue': self.lock_residue,
            'lock_on': self.lock_on,
            'lock_off': self.lock_off,
            'lock_on_transient': self.lock_on_transient,
            'lock_off_transient': self.lock_off_transient,
            'cumulative_shift': self.cumulative_shift,
            'settled': self.history.settled,
            'history': self.history.past.tolist(),
        }
