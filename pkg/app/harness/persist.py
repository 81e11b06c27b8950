"""Writing curves.csv and run_meta.json."""

import json
import logging
import subprocess
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from app.config import settings
from app.errors import PersistError

from .regret import AggregateResult, aggregate
from .runner import RunResult

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=settings.base_dir,
            capture_output=True,
            text=True,
            timeout=10,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def curves_frame(result: AggregateResult) -> pd.DataFrame:
    return pd.DataFrame({
        "round": np.arange(1, result.horizon + 1),
        "mean_regret": result.mean_regret,
        "std_regret": result.std_regret,
        "mean_bonus": result.mean_bonus,
    })


def persist(
    result: Union[AggregateResult, RunResult],
    out_dir: Union[str, Path],
    config: Optional[dict] = None,
) -> list[Path]:
    """Write curves.csv and run_meta.json into out_dir; returns the written paths."""
    if isinstance(result, RunResult):
        result = aggregate([result])
    out_dir = Path(out_dir)
    curves_path = out_dir / "curves.csv"
    meta_path = out_dir / "run_meta.json"

    meta = {
        "config": config or {},
        "git_describe": git_describe(),
        **result.to_dict(),
    }
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        curves_frame(result).to_csv(curves_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        meta_path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise PersistError(f"could not write results: {e.strerror or e}", path=out_dir) from e

    logger.info("wrote %s and %s", curves_path, meta_path)
    return [curves_path, meta_path]
