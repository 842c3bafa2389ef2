"""Frequency deviation series: CSV ingestion, synthesis, deadband and smoothing"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from config import settings
from tools.rng import SeedManager

logger = logging.getLogger(__name__)

SANITY_BOUND_HZ = 1.0


class SignalError(ValueError):
    """Invalid frequency data; `line` is the 1-based file line when known"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class FrequencySeries:
    """1 Hz frequency deviation samples in Hz"""

    samples: np.ndarray
    dt: float = 1.0
    source: str = "memory"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if self.dt != 1.0:
            raise SignalError(f"series must be sampled at 1 Hz, got dt={self.dt}")
        if not np.all(np.isfinite(samples)):
            raise SignalError("series contains non-finite values")
        if samples.size and np.max(np.abs(samples)) >= SANITY_BOUND_HZ:
            raise SignalError(f"|delta f| must stay below {SANITY_BOUND_HZ} Hz")

    def __len__(self) -> int:
        return int(self.samples.size)

    def summary(self) -> dict:
        if not len(self):
            return {'samples': 0}
        return {
            'samples': len(self),
            'mean_hz': float(np.mean(self.samples)),
            'std_hz': float(np.std(self.samples)),
            'min_hz': float(np.min(self.samples)),
            'max_hz': float(np.max(self.samples)),
        }

    def _derive(self, samples: np.ndarray, step: str, **extra) -> "FrequencySeries":
        metadata = dict(self.metadata)
        metadata.setdefault('transforms', [])
        metadata['transforms'] = list(metadata['transforms']) + [step]
        metadata.update(extra)
        return replace(self, samples=samples, metadata=metadata)


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def load_csv(path: Union[str, Path]) -> FrequencySeries:
    """
    Load "t_seconds,delta_f_hz" lines sampled at 1 Hz (header optional)

    Args:
        path: CSV file path

    Returns:
        FrequencySeries: validated series
    """
    path = Path(path)
    if not path.is_file():
        raise SignalError(f"frequency file not found: {path}")

    try:
        raw = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=False,
                          keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise SignalError("no samples")
    except pd.errors.ParserError as e:
        raise SignalError(f"malformed CSV: {e}")
    if raw.empty:
        raise SignalError("no samples")

    offset = 1
    if raw.shape[1] >= 1 and not _is_number(str(raw.iloc[0, 0]).strip()):
        raw = raw.iloc[1:]
        offset = 2
    if raw.empty:
        raise SignalError("no samples")
    if raw.shape[1] != 2:
        raise SignalError(f"expected 2 columns (t_seconds,delta_f_hz), found {raw.shape[1]}", line=offset)

    times = pd.to_numeric(raw.iloc[:, 0].str.strip(), errors="coerce").to_numpy()
    values = pd.to_numeric(raw.iloc[:, 1].str.strip(), errors="coerce").to_numpy()
    lines = np.arange(times.size) + offset

    bad = np.flatnonzero(np.isnan(times) | np.isnan(values))
    if bad.size:
        raise SignalError("cannot parse sample", line=int(lines[bad[0]]))

    steps = np.diff(times)
    backwards = np.flatnonzero(steps <= 0)
    if backwards.size:
        raise SignalError("timestamps must increase monotonically", line=int(lines[backwards[0] + 1]))
    gaps = np.flatnonzero(steps > 1)
    if gaps.size:
        i = gaps[0]
        raise SignalError(f"gap of {steps[i]:g} s after t={times[i]:g}", line=int(lines[i + 1]))
    fractional = np.flatnonzero(steps != 1)
    if fractional.size:
        raise SignalError("samples must be exactly 1 s apart", line=int(lines[fractional[0] + 1]))

    out_of_range = np.flatnonzero(np.abs(values) >= SANITY_BOUND_HZ)
    if out_of_range.size:
        raise SignalError(f"|delta f| must stay below {SANITY_BOUND_HZ} Hz",
                          line=int(lines[out_of_range[0]]))

    series = FrequencySeries(samples=values, source=str(path), metadata={'start_s': float(times[0])})
    logger.info(f"✓ Loaded {len(series)} frequency samples from {path}")
    return series


def to_csv(series: FrequencySeries, path: Union[str, Path]) -> Path:
    """Write the series in the loader's format with a header line"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({'t_seconds': np.arange(len(series)), 'delta_f_hz': series.samples})
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.6f")
    return path


def synth_step(delta: float, event_duration: int, total: int) -> FrequencySeries:
    """delta for 0 <= t <= event_duration, zero afterwards"""
    if event_duration > total:
        raise SignalError(f"event duration {event_duration} s exceeds total {total} s")
    samples = np.zeros(int(total))
    samples[: min(int(event_duration) + 1, int(total))] = delta
    return FrequencySeries(samples=samples, source="step",
                           metadata={'delta_hz': delta, 'event_duration_s': int(event_duration)})


def synth_noise(bias: float, sigma: float, half_period: float, total: int, seed: int) -> FrequencySeries:
    """
    Ornstein-Uhlenbeck deviation around a bias, clipped to +/-0.5 Hz

    The process has stationary standard deviation sigma and correlation
    time half_period (in seconds).
    """
    if sigma < 0:
        raise SignalError(f"sigma must be non-negative, got {sigma}")
    decay = np.exp(-1.0 / half_period)
    rng = SeedManager(seed).signal()
    kicks = rng.standard_normal(int(total)) * sigma * np.sqrt(1.0 - decay ** 2)
    wander = np.empty(int(total))
    level = rng.standard_normal() * sigma
    for t in range(int(total)):
        wander[t] = level
        level = level * decay + kicks[t]
    samples = np.clip(bias + wander, -settings.SIGNAL_CLIP, settings.SIGNAL_CLIP)
    return FrequencySeries(samples=samples, source="noise",
                           metadata={'bias_hz': bias, 'sigma_hz': sigma, 'half_period_s': half_period, 'seed': seed})


def synth_day(kind: str, seed: int, total: int = settings.DAY_SECONDS) -> FrequencySeries:
    """One of the zero_mean / small_bias / large_bias test classes"""
    if kind not in settings.SIGNAL_BIAS:
        raise SignalError(f"unknown signal class '{kind}'")
    series = synth_noise(settings.SIGNAL_BIAS[kind], settings.SIGNAL_SIGMA,
                         settings.SIGNAL_HALF_PERIOD, total, seed)
    return replace(series, source=kind)


def synth_bias_day(delta: float, event_duration: int, seed: int,
                   total: int = settings.DAY_SECONDS, sigma: float = settings.SIGNAL_SIGMA,
                   half_period: float = settings.SIGNAL_HALF_PERIOD) -> FrequencySeries:
    """
    Sustained bias delta for 0 <= t <= event_duration, zero-mean noise afterwards

    The recovery noise has its sample mean removed, so it integrates to
    exactly zero over the recovery period.
    """
    step = synth_step(delta, event_duration, total)
    recovery = np.arange(int(total)) > event_duration
    noise = synth_noise(0.0, sigma, half_period, total, seed).samples
    if recovery.any():
        noise = noise - np.mean(noise[recovery])
    samples = np.where(recovery, np.clip(noise, -settings.SIGNAL_CLIP, settings.SIGNAL_CLIP), step.samples)
    return FrequencySeries(samples=samples, source="bias_day",
                           metadata={'delta_hz': delta, 'event_duration_s': int(event_duration), 'sigma_hz': sigma,
                                     'half_period_s': half_period, 'seed': seed})


def apply_deadband(series: FrequencySeries, deadband: float) -> FrequencySeries:
    """Zero every sample with |delta f| <= deadband; others pass unchanged"""
    if deadband < 0:
        raise SignalError(f"deadband must be non-negative, got {deadband}")
    if deadband == 0:
        return series
    samples = np.where(np.abs(series.samples) <= deadband, 0.0, series.samples)
    return series._derive(samples, f"deadband({deadband:g})")


def moving_average(series: FrequencySeries, window: int) -> FrequencySeries:
    """Trailing mean over `window` samples; the first window-1 use partial means"""
    if window < 1:
        raise SignalError(f"window must be >= 1, got {window}")
    if window == 1:
        return series
    samples = pd.Series(series.samples).rolling(window, min_periods=1).mean().to_numpy()
    return series._derive(samples, f"moving_average({window})")
