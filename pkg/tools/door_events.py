"""Door-opening schedules and the per-step open/closed mask"""

import logging
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from config.scenario import DoorModel
from config.settings import DAY_SECONDS, HOUR_SECONDS
from tools.rng import SeedManager, truncated_normal

logger = logging.getLogger(__name__)

SCHEDULE_COLUMNS = ["device", "day", "start", "duration"]


class DoorEvent(NamedTuple):
    start: int       # s since midnight of the schedule's day
    duration: int    # s


def merge_events(events: List[DoorEvent]) -> List[DoorEvent]:
    """Merge overlapping openings into single longer ones"""
    merged: List[DoorEvent] = []
    for event in sorted(events):
        if merged and event.start < merged[-1].start + merged[-1].duration:
            last = merged[-1]
            end = max(last.start + last.duration, event.start + event.duration)
            merged[-1] = DoorEvent(last.start, end - last.start)
        else:
            merged.append(event)
    return merged


def sample_schedule(model: DoorModel, device_id: int, day: int, seed: int) -> List[DoorEvent]:
    """
    Random door openings of one refrigerator over one day

    Args:
        model: opening count, duration and hourly profile statistics
        device_id: device index (part of the random stream key)
        day: day index (part of the random stream key)
        seed: run seed

    Returns:
        list: merged DoorEvent tuples sorted by start
    """
    rng = SeedManager(seed).doors(day, device_id)
    count = int(np.rint(truncated_normal(rng, model.openings.mean, model.openings.std, 1)[0]))
    if count <= 0:
        return []
    hours = rng.choice(24, size=count, p=np.asarray(model.hourly_profile))
    starts = hours * HOUR_SECONDS + rng.integers(0, HOUR_SECONDS, size=count)
    durations = np.rint(truncated_normal(rng, model.duration.mean, model.duration.std, count, low=1.0))
    durations = np.maximum(durations, 1).astype(int)
    return merge_events([DoorEvent(int(s), int(d)) for s, d in zip(starts, durations)])


def mean_schedule(model: DoorModel) -> List[DoorEvent]:
    """Deterministic day with the mean count and duration, spread by the hourly profile quantiles"""
    count = int(round(model.openings.mean))
    duration = max(1, int(round(model.duration.mean)))
    cdf = np.concatenate([[0.0], np.cumsum(model.hourly_profile)])
    quantiles = (np.arange(count) + 0.5) / count
    starts = np.interp(quantiles, cdf, np.arange(25) * HOUR_SECONDS)
    return merge_events([DoorEvent(int(s), duration) for s in starts])


def sample_population_schedules(model: DoorModel, n_devices: int, day: int, seed: int) -> pd.DataFrame:
    """One day of schedules for every device as a device/day/start/duration table"""
    rows = []
    for device in range(n_devices):
        for event in sample_schedule(model, device, day, seed):
            rows.append((device, day, event.start, event.duration))
    return pd.DataFrame(rows, columns=SCHEDULE_COLUMNS)


def export_schedules(schedules: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    schedules[SCHEDULE_COLUMNS].to_csv(path, index=False)
    logger.info(f"✓ Exported {len(schedules)} door events to {path}")
    return path


def import_schedules(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"door schedule file not found: {path}")
    frame = pd.read_csv(path)
    missing = [c for c in SCHEDULE_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    return frame[SCHEDULE_COLUMNS].astype(int)


class DoorTracker:
    """
    Tracks which doors are open at each engine step.

    Schedules are generated per day on first use (or taken from an
    imported table) and are read-only afterwards.
    """

    def __init__(self, model: Optional[DoorModel], n_devices: int, seed: int,
                 schedules: Optional[pd.DataFrame] = None):
        self.name = "DoorTracker"
        self.model = model
        self.n_devices = n_devices
        self.seed = seed
        self._imported = schedules
        self._days: Dict[int, pd.DataFrame] = {}
        self._open_until = np.full(n_devices, -1, dtype=np.int64)
        self._loaded_day = None
        self._cursor = 0
        self._events = None

    @property
    def enabled(self) -> bool:
        return self.model is not None or self._imported is not None

    def schedule_for_day(self, day: int) -> pd.DataFrame:
        if self._imported is not None:
            frame = self._imported[self._imported["day"] == day]
            if frame.empty and day > 0:
                # imported schedules repeat with the period of their day span
                span = int(self._imported["day"].max()) + 1
                frame = self._imported[self._imported["day"] == day % span]
            return frame
        return sample_population_schedules(self.model, self.n_devices, day, self.seed)

    def _load_day(self, day: int):
        if day not in self._days:
            self._days[day] = self.schedule_for_day(day)
        frame = self._days[day].sort_values(["start", "device"], kind="mergesort")
        offset = day * DAY_SECONDS
        starts = frame["start"].to_numpy(dtype=np.int64) + offset
        ends = starts + frame["duration"].to_numpy(dtype=np.int64)
        devices = frame["device"].to_numpy(dtype=np.int64)
        self._events = (starts, ends, devices)
        self._cursor = 0
        self._loaded_day = day
        logger.info(f"[{self.name}] ✓ Day {day}: {len(starts)} door openings scheduled")

    def open_mask(self, step: int) -> np.ndarray:
        """Boolean mask of devices whose door is open during [step, step+1)"""
        if not self.enabled:
            return np.zeros(self.n_devices, dtype=bool)
        day = step // DAY_SECONDS
        if day != self._loaded_day:
            self._load_day(day)
        starts, ends, devices = self._events
        stop = int(np.searchsorted(starts, step, side="right"))
        if stop > self._cursor:
            chunk = slice(self._cursor, stop)
            np.maximum.at(self._open_until, devices[chunk], ends[chunk])
            self._cursor = stop
        return self._open_until > step

    def reset(self):
        self._open_until[:] = -1
        self._loaded_day = None
        self._cursor = 0
