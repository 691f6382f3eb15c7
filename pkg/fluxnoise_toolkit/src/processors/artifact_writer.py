"""CSV and JSON result artifacts with embedded run metadata.

CSV artifacts open with ``# key: value`` lines holding the metadata as
JSON values. They carry no timestamp, so identical runs produce identical
files. JSON artifacts add ``generated_at`` to their ``metadata`` object.
"""

import io
import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import pandas as pd

from ..utils import atomic_write_text, safe_json_serialize

logger = logging.getLogger(__name__)

METADATA_PREFIX = "# "


def _encode(value: Any) -> str:
    return json.dumps(value, default=safe_json_serialize, sort_keys=True, ensure_ascii=False)


def render_csv(frame: pd.DataFrame, metadata: Dict[str, Any]) -> str:
    header = "".join(f"{METADATA_PREFIX}{key}: {_encode(metadata[key])}\n" for key in sorted(metadata))
    body = frame.to_csv(index=False, na_rep="nan", lineterminator="\n")
    return header + body


def write_csv(path: Union[str, Path], frame: pd.DataFrame, metadata: Dict[str, Any]) -> Path:
    """Write ``frame`` behind a metadata header; atomic."""
    target = atomic_write_text(path, render_csv(frame, metadata))
    logger.info(f"Wrote {len(frame)} rows to {target}")
    return target


def write_json(path: Union[str, Path], payload: Dict[str, Any], metadata: Dict[str, Any]) -> Path:
    """Write ``payload`` plus a ``metadata`` object stamped with ``generated_at``."""
    stamped = dict(metadata)
    stamped["generated_at"] = datetime.now(timezone.utc).isoformat()
    document = dict(payload)
    document["metadata"] = stamped
    target = atomic_write_text(path, json.dumps(document, indent=2, default=safe_json_serialize) + "\n")
    logger.info(f"Wrote {target}")
    return target


def read_csv_artifact(path: Union[str, Path]) -> Tuple[Dict[str, Any], pd.DataFrame]:
    """Split a CSV artifact back into its metadata and data frame."""
    metadata: Dict[str, Any] = {}
    body = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.startswith(METADATA_PREFIX) and not body:
                key, _, value = line[len(METADATA_PREFIX):].partition(": ")
                metadata[key] = json.loads(value)
            else:
                body.append(line)
    return metadata, pd.read_csv(io.StringIO("".join(body)))
