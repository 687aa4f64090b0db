"""
I/O utilities: CSV and JSONL writers, run manifests and config loading.
"""

import csv
import hashlib
import json
import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .models import RunConfig, RunManifest

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1

# column order of every CSV the toolkit writes
SPEED_CURVE_COLUMNS = ["zeta", "v"]
SPEED_COLUMNS = ["law", "lambda", "mu", "zeta_star", "v_star", "at_tail_boundary"]
SIMULATE_COLUMNS = ["n", "lambda", "mu", "statistic", "nu", "v_n", "std_error",
                    "t_start", "t_end", "events", "wall_time"]
SERIES_COLUMNS = ["t", "value"]
BRW_COLUMNS = ["t", "size", "leader"]
LEADING_CDF_COLUMNS = ["x", "cdf"]
QUANTILE_COLUMNS = ["t", "nu", "quantile"]
GRID_COLUMNS = ["x", "f"]
WAVE_COLUMNS = ["x", "phi", "z"]
TRADEOFF_COLUMNS = ["lambda", "mu", "v_star"]
TABLE_COLUMNS = ["lambda", "mu", "v_n_sim", "v_n_stderr", "v_star_star",
                 "v_n_reference", "v_star_star_reference"]

MANIFEST_NAME = "manifest.jsonl"


def format_float(value: Any) -> str:
    """Nine significant digits for floats; everything else via str()."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    if value is None:
        return ""
    return str(value)


class CSVWriter:
    """
    Writer for CSV output with a fixed header.
    """

    def __init__(self, file_path: str, columns: Sequence[str]):
        self.file_path = Path(file_path)
        self.columns = list(columns)
        self.file_handle = None
        self._writer = None

    def __enter__(self):
        self.file_path.parent.mkdir(parents=True, exist_ok=True)
        self.file_handle = open(self.file_path, 'w', encoding='utf-8', newline='')
        self._writer = csv.writer(self.file_handle)
        self._writer.writerow(self.columns)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.file_handle:
            self.file_handle.close()

    def write_row(self, row: Sequence[Any]) -> None:
        """Write one row; its length must match the header."""
        if not self._writer:
            raise ValueError("CSVWriter not opened")
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} fields, header has {len(self.columns)}")
        self._writer.writerow([format_float(v) for v in row])

    def write_rows(self, rows: Iterable[Sequence[Any]]) -> None:
        for row in rows:
            self.write_row(row)


def write_csv(file_path: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    with CSVWriter(file_path, columns) as writer:
        writer.write_rows(rows)
    return str(file_path)


class JSONLWriter:
    """
    Writer for JSONL (JSON Lines) format. Records are dataclass_json
    instances or plain dicts.
    """

    def __init__(self, file_path: str, append: bool = False):
        self.file_path = Path(file_path)
        self.append = append
        self.file_handle = None

    def __enter__(self):
        self.file_path.parent.mkdir(parents=True, exist_ok=True)
        self.file_handle = open(self.file_path, 'a' if self.append else 'w', encoding='utf-8')
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self.file_handle:
            self.file_handle.close()

    def write_record(self, record: Any) -> None:
        """Write a single record to the JSONL file."""
        if not self.file_handle:
            raise ValueError("JSONLWriter not opened")
        data = record if isinstance(record, dict) else record.to_dict()
        json.dump(data, self.file_handle, ensure_ascii=False)
        self.file_handle.write('\n')

    def write_records(self, records: Iterable[Any]) -> None:
        for record in records:
            self.write_record(record)


class JSONLReader:
    """
    Reader for JSONL (JSON Lines) format.
    """

    def __init__(self, file_path: str, record_type: Any = None):
        self.file_path = Path(file_path)
        self.record_type = record_type

    def read_records(self) -> List[Any]:
        """Read all records, skipping malformed lines."""
        return list(self)

    def __iter__(self) -> Iterator[Any]:
        if not self.file_path.exists():
            return

        with open(self.file_path, 'r', encoding='utf-8') as f:
            for line_num, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue

                try:
                    data = json.loads(line)
                    yield self.record_type.from_dict(data) if self.record_type else data
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                    logger.warning("skipping invalid record at line %d: %s", line_num, e)


def sha256_file(file_path: str) -> str:
    digest = hashlib.sha256()
    with open(file_path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def append_manifest(out_dir: str, manifest: RunManifest) -> str:
    """Append one manifest line to ``<out_dir>/manifest.jsonl``."""
    path = Path(out_dir) / MANIFEST_NAME
    with JSONLWriter(str(path), append=True) as writer:
        writer.write_record(manifest)
    return str(path)


def build_manifest(subcommand: str, config: RunConfig, version: str,
                   started_at: datetime, wall_time: float,
                   outputs: Sequence[str]) -> RunManifest:
    return RunManifest(
        subcommand=subcommand,
        config=config.to_dict(),
        version=version,
        schema_version=CSV_SCHEMA_VERSION,
        started_at=started_at.isoformat(timespec="seconds"),
        wall_time=wall_time,
        outputs={str(p): sha256_file(p) for p in outputs},
    )


def load_config(file_path: Optional[str]) -> RunConfig:
    """
    Load a RunConfig from a flat JSON object; missing file path gives defaults.
    The jump law may be given under "dist" as well as "law".

    Raises:
        ValueError: the file is not a JSON object or has unknown keys
    """
    if not file_path:
        return RunConfig()
    with open(file_path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"config {file_path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ValueError(f"config {file_path} must hold a JSON object")
    if "dist" in data:
        if "law" in data:
            raise ValueError(f"config {file_path} sets both 'dist' and 'law'")
        data["law"] = data.pop("dist")
    known = set(RunConfig().to_dict())
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    return RunConfig.from_dict(data)


def read_grid_csv(file_path: str) -> Tuple[np.ndarray, np.ndarray]:
    """Read an (x, f) CSV with a header row."""
    xs, fs = [], []
    with open(file_path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not set(GRID_COLUMNS) <= set(reader.fieldnames):
            raise ValueError(f"{file_path} needs columns {GRID_COLUMNS}")
        for row in reader:
            xs.append(float(row["x"]))
            fs.append(float(row["f"]))
    return np.asarray(xs), np.asarray(fs)


def default_workers() -> int:
    """Worker count from JUMPSYNC_WORKERS, else min(32, cpu + 4)."""
    env = os.environ.get("JUMPSYNC_WORKERS")
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ValueError(f"JUMPSYNC_WORKERS must be an integer, got {env!r}")
        if workers < 1:
            raise ValueError(f"JUMPSYNC_WORKERS must be >= 1, got {workers}")
        return workers
    return min(32, (os.cpu_count() or 1) + 4)


def generate_default_output_dir(subcommand: str, root: str = "outputs") -> str:
    """outputs/<subcommand>_<timestamp>, created on demand."""
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    path = Path(root) / f"{subcommand}_{timestamp}"
    path.mkdir(parents=True, exist_ok=True)
    return str(path)
