"""Classification CSVs turned into contextual bandits (one arm per class)."""

import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from app.errors import DatasetParseError, LabelOutOfRangeError

from .bandits import SHUFFLE_KEY, EnvState
from .spec import DatasetSchema, EnvSpec

logger = logging.getLogger(__name__)


class CsvBanditLoader:
    """Loads a labeled CSV, standardizes the features and shuffles the rows once."""

    def __init__(self, schema: DatasetSchema):
        self.schema = schema

    def load(self, file_path: str | Path, seed: int, noise_std: float = 0.0) -> EnvState:
        file_path = Path(file_path)
        if not file_path.exists():
            raise FileNotFoundError(f"CSV not found: {file_path}")

        frame = self._read(file_path)
        features, labels, class_count = self._parse(frame)
        features = self._standardize(features, list(frame.columns.drop(self.schema.label_column)))

        order = np.random.default_rng([int(seed), SHUFFLE_KEY]).permutation(labels.shape[0])
        spec = EnvSpec(
            kind="dataset",
            arm_count=class_count,
            context_dim=features.shape[1],
            noise_std=noise_std,
            context_law="dataset_order",
            dataset=self.schema.model_copy(update={"path": file_path}),
        )
        logger.info(
            "Loaded %s: %d rows, %d features, %d classes",
            file_path.name, labels.shape[0], features.shape[1], class_count,
        )
        return EnvState(spec, seed, features=features[order], labels=labels[order])

    def _read(self, file_path: Path) -> pd.DataFrame:
        try:
            frame = pd.read_csv(file_path, dtype=str, keep_default_na=False, encoding="utf-8")
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            raise DatasetParseError(f"{file_path}: {e}") from e
        if self.schema.label_column not in frame.columns:
            raise DatasetParseError(
                f"{file_path}: no '{self.schema.label_column}' column in header {list(frame.columns)}",
                column=self.schema.label_column,
            )
        if len(frame) == 0:
            raise DatasetParseError(f"{file_path}: no data rows")
        if len(frame.columns) < 2:
            raise DatasetParseError(f"{file_path}: no feature columns")
        return frame

    def _parse(self, frame: pd.DataFrame) -> tuple[np.ndarray, np.ndarray, int]:
        numeric = {}
        for column in frame.columns:
            raw = frame[column].str.strip()
            values = pd.to_numeric(raw, errors="coerce")
            bad = values.isna() | ~np.isfinite(values.to_numpy(dtype=np.float64, na_value=np.nan))
            if bad.any():
                row = int(np.flatnonzero(bad.to_numpy())[0])
                raise DatasetParseError(
                    f"row {row + 1}, column '{column}': cannot parse {frame[column].iloc[row]!r} as a number",
                    row=row + 1,
                    column=column,
                )
            numeric[column] = values.to_numpy(dtype=np.float64)

        label_values = numeric.pop(self.schema.label_column)
        labels = np.rint(label_values).astype(np.int64)
        class_count = self.schema.class_count or int(labels.max()) + 1
        off = (labels != label_values) | (labels < 0) | (labels >= class_count)
        if off.any():
            row = int(np.flatnonzero(off)[0])
            raise LabelOutOfRangeError(
                f"row {row + 1}: label {label_values[row]!r} is not a class index in [0, {class_count})"
            )
        if class_count < 2:
            raise LabelOutOfRangeError(f"dataset needs at least 2 classes, found {class_count}")

        features = np.column_stack([numeric[c] for c in frame.columns if c != self.schema.label_column])
        return features, labels, class_count

    def _standardize(self, features: np.ndarray, names: list[str]) -> np.ndarray:
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        flat = std == 0
        for name in np.asarray(names)[flat]:
            logger.warning("Feature column '%s' is constant; left centered but unscaled", name)
        std[flat] = 1.0
        return (features - mean) / std


def load_dataset_bandit(
    path: str | Path,
    schema: Optional[DatasetSchema] = None,
    seed: int = 0,
    noise_std: float = 0.0,
) -> EnvState:
    """Environment over the rows of a classification CSV, in seed-shuffled order."""
    schema = schema or DatasetSchema(path=Path(path))
    return CsvBanditLoader(schema).load(path, seed, noise_std)
