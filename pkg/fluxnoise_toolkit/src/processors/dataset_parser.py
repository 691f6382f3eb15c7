"""Measured T₂*(Φ) dataset reader and writer."""

import logging
import math
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..fitting.fit import T2StarDataset, T2StarPoint
from ..qubit.transmon import DEGENERACY_GUARD
from ..utils import DatasetError, atomic_write_text

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("phi_bias", "t2_star_us")
OPTIONAL_COLUMNS = ("t1_us", "weight")
DEVICE_TAG = "# device:"


class BiasCalibration(BaseModel):
    """Affine map Φ/Φ₀ = slope·bias + offset from instrument bias (V or A)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    slope: float
    offset: float = 0.0
    unit: str = Field("V", description="Instrument bias unit, informational")

    @field_validator("slope")
    @classmethod
    def _nonzero(cls, slope: float) -> float:
        if slope == 0 or not math.isfinite(slope):
            raise ValueError("calibration slope must be finite and non-zero")
        return slope

    def to_phi(self, bias):
        return self.slope * np.asarray(bias, dtype=float) + self.offset


class DatasetParser:
    """Reads and writes the ``phi_bias,t2_star_us[,t1_us][,weight]`` CSV format."""

    def __init__(self, calibration: Optional[BiasCalibration] = None):
        self.calibration = calibration

    def read_device_label(self, path: Path) -> str:
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                if not line.startswith("#"):
                    break
                if line.startswith(DEVICE_TAG):
                    return line[len(DEVICE_TAG):].strip()
        return ""

    def _numeric_column(self, frame: pd.DataFrame, column: str, required: bool) -> List[Optional[float]]:
        values: List[Optional[float]] = []
        for index, raw in enumerate(frame[column]):
            row = index + 1
            text = "" if raw is None or (isinstance(raw, float) and math.isnan(raw)) else str(raw).strip()
            if not text:
                if required:
                    raise DatasetError(f"missing value in column '{column}'", row=row)
                values.append(None)
                continue
            try:
                value = float(text)
            except ValueError:
                raise DatasetError(f"non-numeric value {text!r} in column '{column}'", row=row) from None
            if not math.isfinite(value):
                raise DatasetError(f"non-finite value {text!r} in column '{column}'", row=row)
            values.append(value)
        return values

    def parse(self, path: Union[str, Path]) -> T2StarDataset:
        path = Path(path)
        try:
            frame = pd.read_csv(path, comment="#", dtype=str, keep_default_na=False, skipinitialspace=True)
        except FileNotFoundError as e:
            raise DatasetError(f"dataset file not found: {path}") from e
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            raise DatasetError(f"cannot parse {path}: {e}") from e

        frame.columns = [c.strip() for c in frame.columns]
        for column in REQUIRED_COLUMNS:
            if column not in frame.columns:
                raise DatasetError(f"missing required column '{column}' in {path}")
        unknown = [c for c in frame.columns if c not in REQUIRED_COLUMNS + OPTIONAL_COLUMNS]
        if unknown:
            logger.warning(f"Ignoring unknown dataset column(s): {', '.join(unknown)}")

        bias = self._numeric_column(frame, "phi_bias", required=True)
        t2 = self._numeric_column(frame, "t2_star_us", required=True)
        t1 = self._numeric_column(frame, "t1_us", required=False) if "t1_us" in frame else [None] * len(frame)
        weight = self._numeric_column(frame, "weight", required=False) if "weight" in frame else [None] * len(frame)

        points = []
        for index in range(len(frame)):
            row = index + 1
            phi = float(self.calibration.to_phi(bias[index])) if self.calibration else bias[index]
            if t2[index] <= 0:
                raise DatasetError(f"t2_star_us must be positive, got {t2[index]!r}", row=row)
            if t1[index] is not None and t1[index] <= 0:
                raise DatasetError(f"t1_us must be positive, got {t1[index]!r}", row=row)
            if weight[index] is not None and weight[index] <= 0:
                raise DatasetError(f"weight must be positive, got {weight[index]!r}", row=row)
            if abs(math.cos(math.pi * phi)) <= DEGENERACY_GUARD:
                raise DatasetError(f"bias {phi!r} Phi0 lies on the half-flux-quantum degeneracy", row=row)
            points.append(T2StarPoint(
                phi_bias=phi,
                t2_star_us=t2[index],
                t1_us=t1[index],
                weight=1.0 if weight[index] is None else weight[index],
            ))

        if not points:
            raise DatasetError(f"dataset {path} contains no data rows")
        try:
            dataset = T2StarDataset(points=points, device_label=self.read_device_label(path))
        except ValidationError as e:
            raise DatasetError(f"invalid dataset {path}: {e}") from e
        logger.info(f"Loaded {len(dataset)} bias points from {path}")
        return dataset

    def to_csv(self, dataset: T2StarDataset) -> str:
        frame = pd.DataFrame({
            "phi_bias": [p.phi_bias for p in dataset.points],
            "t2_star_us": [p.t2_star_us for p in dataset.points],
        })
        if dataset.has_t1:
            frame["t1_us"] = [p.t1_us for p in dataset.points]
        if any(p.weight != 1.0 for p in dataset.points):
            frame["weight"] = [p.weight for p in dataset.points]
        header = f"{DEVICE_TAG} {dataset.device_label}\n" if dataset.device_label else ""
        return header + frame.to_csv(index=False, na_rep="", lineterminator="\n")

    def write(self, dataset: T2StarDataset, path: Union[str, Path]) -> Path:
        return atomic_write_text(path, self.to_csv(dataset))


def load_dataset(path: Union[str, Path], calibration: Optional[BiasCalibration] = None) -> T2StarDataset:
    """Read a T₂* dataset CSV; bias column in Φ₀ unless ``calibration`` is given."""
    return DatasetParser(calibration).parse(path)


def write_dataset(dataset: T2StarDataset, path: Union[str, Path]) -> Path:
    """Inverse of ``load_dataset`` for uncalibrated files."""
    return DatasetParser().write(dataset, path)
