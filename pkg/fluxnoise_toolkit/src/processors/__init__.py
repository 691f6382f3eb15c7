"""Dataset ingestion and result serialization."""

from .artifact_writer import read_csv_artifact, write_csv, write_json
from .dataset_parser import BiasCalibration, DatasetParser, load_dataset, write_dataset

__all__ = [
    "BiasCalibration",
    "DatasetParser",
    "load_dataset",
    "write_dataset",
    "write_csv",
    "write_json",
    "read_csv_artifact",
]
