"""Run output writers: per-step CSV, metrics JSON, downsampled plot data"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from tools.metrics import RunRecord

logger = logging.getLogger(__name__)

PER_STEP_COLUMNS = ['t', 'delta_f', 'P_agg', 'P_b_smoothed', 'P_d', 'T_true', 'T_est', 'D_a', 'L_on', 'L_off']


def _jsonable(value):
    if isinstance(value, (np.floating, float)):
        return None if not math.isfinite(float(value)) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def downsample(frame: pd.DataFrame, factor: int) -> pd.DataFrame:
    """Block means over `factor` consecutive rows (the last block may be shorter)"""
    if factor <= 1:
        return frame
    groups = np.arange(len(frame)) // factor
    return frame.groupby(groups).mean().reset_index(drop=True)


def write_outputs(rec: RunRecord, scenario=None, directory: Optional[Union[str, Path]] = None,
                  name: Optional[str] = None) -> Dict[str, Path]:
    """
    Write the record's files

    Args:
        rec: completed run
        scenario: scenario supplying output settings and the run name
        directory: overrides the scenario's output directory
        name: overrides the file stem

    Returns:
        dict: written file paths keyed by kind
    """
    outputs = scenario.outputs if scenario is not None else None
    directory = Path(directory or (outputs.directory if outputs and outputs.directory else "outputs"))
    stem = name or (scenario.name if scenario is not None else "run")
    paths: Dict[str, Path] = {}
    try:
        directory.mkdir(parents=True, exist_ok=True)
        frame = rec.to_frame()

        if outputs is None or outputs.per_step_csv:
            path = directory / f"{stem}_steps.csv"
            frame[PER_STEP_COLUMNS].to_csv(path, index=False, lineterminator="\n")
            paths['per_step_csv'] = path

        if outputs is None or outputs.metrics_json:
            path = directory / f"{stem}_metrics.json"
            with open(path, 'w', encoding='utf-8') as f:
                json.dump({k: _jsonable(v) for k, v in rec.metrics.items()}, f, indent=2)
            paths['metrics_json'] = path

        if outputs is not None and outputs.downsample:
            path = directory / f"{stem}_plot.csv"
            downsample(frame, outputs.downsample).to_csv(path, index=False, lineterminator="\n")
            paths['plot_csv'] = path
    except OSError as e:
        raise OSError(f"cannot write outputs to {directory}: {e}") from e

    logger.info(f"✓ Wrote {len(paths)} output file(s) to {directory}")
    return paths
