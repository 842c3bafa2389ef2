"""Run records, reserve arithmetic and control-performance metrics"""

import logging
from dataclasses import dataclass, field, fields
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd

from config.settings import RESERVE_PRICE_EUR_MW_H

logger = logging.getLogger(__name__)

# Per-step series of a RunRecord, in CSV column order
SERIES_COLUMNS = {
    'time': 't',
    'frequency': 'delta_f',
    'aggregate_power': 'P_agg',
    'baseline_power': 'P_b_smoothed',
    'desired_power': 'P_d',
    'mean_temp_true': 'T_true',
    'mean_temp_est': 'T_est',
    'actual_duty': 'D_a',
    'lock_on': 'L_on',
    'lock_off': 'L_off',
    'frequency_raw': 'delta_f_raw',
    'uncontrolled_power': 'P_b',
    'on_fraction': 'on_fraction',
    'switch_fraction': 'x',
    'probability': 'rho',
    'reset_factor': 'K_r',
    'limit_shift': 'dT_lim',
    'limit_shift_std': 'shift_std',
}


@dataclass
class RunRecord:
    """Per-step aggregate outputs of one simulation run"""

    time: np.ndarray
    frequency_raw: np.ndarray
    frequency: np.ndarray
    aggregate_power: np.ndarray
    baseline_power: np.ndarray
    desired_power: np.ndarray
    mean_temp_true: np.ndarray
    mean_temp_est: np.ndarray
    actual_duty: np.ndarray
    lock_on: np.ndarray
    lock_off: np.ndarray
    on_fraction: np.ndarray
    switch_fraction: np.ndarray
    probability: np.ndarray
    reset_factor: np.ndarray
    limit_shift: np.ndarray
    limit_shift_std: np.ndarray
    uncontrolled_power: Optional[np.ndarray] = None
    reserve_capacity: float = 0.0
    n_devices: int = 0
    mode: str = "proposed"
    nominal_temp: float = float("nan")
    nominal_temp_true: float = float("nan")
    diagnostics: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.time)
        for f in fields(self):
            if f.name in SERIES_COLUMNS:
                value = getattr(self, f.name)
                if value is not None and len(value) != n:
                    raise ValueError(f"series '{f.name}' has {len(value)} samples, expected {n}")

    @property
    def n_steps(self) -> int:
        return len(self.time)

    def to_frame(self) -> pd.DataFrame:
        data = {}
        for attr, column in SERIES_COLUMNS.items():
            value = getattr(self, attr)
            if value is not None:
                data[column] = value
        return pd.DataFrame(data)


@dataclass(frozen=True)
class MapeSummary:
    reserve: Optional[float]
    tracking: Optional[float]
    baseline: Optional[float]
    reserve_error: np.ndarray
    tracking_excluded: int = 0
    baseline_normalization: str = "reserve"

    def as_dict(self) -> dict:
        return {
            'e_r_mape': self.reserve,
            'e_t_mape': self.tracking,
            'e_b_mape': self.baseline,
            'tracking_excluded': self.tracking_excluded,
            'baseline_normalization': self.baseline_normalization,
        }


def reserve_capacity(n_devices: int, mean_power: float, reserve_duty: float) -> float:
    """P_res = N_r * mean P_n * D^r, in W"""
    if n_devices < 0 or mean_power < 0 or reserve_duty < 0:
        raise ValueError("reserve capacity inputs must be non-negative")
    return float(n_devices) * float(mean_power) * float(reserve_duty)


def desired_power(baseline: Union[float, np.ndarray], reserve: float,
                  delta_f: Union[float, np.ndarray], df_max: float):
    """Droop set point: baseline + P_res * delta_f / df_max, saturated at +/-df_max"""
    return baseline + reserve * np.clip(np.divide(delta_f, df_max), -1.0, 1.0)


def mape_suite(rec: RunRecord) -> MapeSummary:
    """
    Reserve, tracking and baseline mean absolute percentage errors

    Reserve and baseline errors are normalized by P_res, tracking error by
    P_d. Samples with P_d below 1% of P_res are left out of the tracking
    error and counted instead.
    """
    p_res = rec.reserve_capacity
    gap = rec.desired_power - rec.aggregate_power

    if p_res > 0:
        reserve_error = 100.0 * gap / p_res
        reserve = float(np.mean(np.abs(reserve_error)))
        usable = np.abs(rec.desired_power) >= 0.01 * p_res
    else:
        reserve_error = np.full(rec.n_steps, np.nan)
        reserve = None
        usable = rec.desired_power != 0

    excluded = int(np.count_nonzero(~usable))
    tracking = None
    if np.any(usable):
        tracking = float(100.0 * np.mean(np.abs(gap[usable] / rec.desired_power[usable])))

    baseline = None
    normalization = "reserve"
    if rec.uncontrolled_power is not None:
        spread = np.abs(rec.baseline_power - rec.uncontrolled_power)
        if p_res > 0:
            baseline = float(100.0 * np.mean(spread) / p_res)
        else:
            # no reserve: fall back to the mean baseline as the scale
            normalization = "baseline"
            scale = float(np.mean(rec.baseline_power))
            baseline = float(100.0 * np.mean(spread) / scale) if scale > 0 else None

    if excluded:
        logger.info(f"Tracking error excludes {excluded} samples with P_d below 1% of P_res")
    return MapeSummary(reserve=reserve, tracking=tracking, baseline=baseline,
                       reserve_error=reserve_error, tracking_excluded=excluded,
                       baseline_normalization=normalization)


def droop_points(rec: RunRecord, bins: Union[int, np.ndarray] = 41,
                 df_max: float = 0.2) -> Tuple[pd.DataFrame, float]:
    """
    Binned activated reserve against the frequency deviation

    Args:
        rec: completed run (raw frequency is used on the x axis)
        bins: bin count over [-df_max, df_max] or explicit edges
        df_max: full-activation deviation, Hz

    Returns:
        tuple: (table with one row per non-empty bin, mean |activated - desired| in % of P_res)
    """
    edges = np.linspace(-df_max, df_max, int(bins) + 1) if np.ndim(bins) == 0 else np.asarray(bins)
    frame = pd.DataFrame({
        'delta_f': rec.frequency_raw,
        'activated': rec.aggregate_power - rec.baseline_power,
        'desired': rec.desired_power - rec.baseline_power,
    })
    frame['bin'] = pd.cut(frame['delta_f'], edges, include_lowest=True)
    table = (frame.groupby('bin', observed=True)
             .agg(delta_f=('delta_f', 'mean'),
                  activated=('activated', 'mean'),
                  activated_std=('activated', 'std'),
                  desired=('desired', 'mean'),
                  count=('activated', 'size'))
             .reset_index(drop=True))
    table = table[table['count'] > 0]
    if rec.reserve_capacity > 0 and len(table):
        deviation = float(100.0 * np.mean(np.abs(table['activated'] - table['desired'])) / rec.reserve_capacity)
    else:
        deviation = float("nan")
    return table, deviation


def temperature_rmse(rec: RunRecord) -> float:
    """RMS deviation of the true mean temperature from its nominal value"""
    return float(np.sqrt(np.mean((rec.mean_temp_true - rec.nominal_temp_true) ** 2)))


def max_temperature_deviation(rec: RunRecord, estimated: bool = False) -> float:
    if estimated:
        return float(np.max(np.abs(rec.mean_temp_est - rec.nominal_temp)))
    return float(np.max(np.abs(rec.mean_temp_true - rec.nominal_temp_true)))


def reserve_economics(n_devices: int, mean_power: float, reserve_duty: float,
                      price_eur_mw_h: float = RESERVE_PRICE_EUR_MW_H) -> dict:
    """Capacity payment arithmetic for a reserve pool"""
    reserve_mw = reserve_capacity(n_devices, mean_power, reserve_duty) / 1e6
    annual = reserve_mw * price_eur_mw_h * 8760
    return {
        'reserve_mw': reserve_mw,
        'annual_revenue_eur': annual,
        'revenue_per_device_eur': annual / n_devices if n_devices else 0.0,
    }


def run_summary(rec: RunRecord) -> dict:
    """Flat metric dict for JSON output"""
    mapes = mape_suite(rec)
    summary = {
        'P_res_W': rec.reserve_capacity,
        'N_sim': rec.n_steps,
        'N_r': rec.n_devices,
        'mode': rec.mode,
        **mapes.as_dict(),
        'temperature_rmse_C': temperature_rmse(rec),
        'max_temperature_deviation_C': max_temperature_deviation(rec),
        'max_estimated_deviation_C': max_temperature_deviation(rec, estimated=True),
    }
    summary.update({f"diag_{k}": v for k, v in rec.diagnostics.items()})
    return summary
