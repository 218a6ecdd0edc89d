"""Ingestion of the instrumental-variable dataset from a local CSV file.

The expected schema is one row per country with the outcome (log GDP per
capita), the treatment (expropriation risk), the instrument (log European
settler mortality), latitude, and three mutually exclusive continent dummies
(Africa, Asia, other ex-British colonies). The default column map targets
the variable names of the published replication files; every field can be
remapped. The repository ships a synthetic fixture with the same schema for
CI; the real file must be obtained by the user (see README).
"""

import csv
import math
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import EmptyInput, MalformedRow, MissingColumn
from .models import IvDataset

# Canonical variable names in the published replication files.
DEFAULT_COLUMN_MAP = {
    "y": "logpgp95",
    "x": "avexpr",
    "z": "logem4",
    "latitude": "lat_abst",
    "africa": "africa",
    "asia": "asia",
    "other_cont": "other",
}

FIELDS = tuple(DEFAULT_COLUMN_MAP)
DUMMY_FIELDS = ("africa", "asia", "other_cont")

EXPECTED_SAMPLE_SIZE = 64

CONTROL_NAMES = ("latitude", "africa", "asia", "other_cont")


def fixture_path() -> Path:
    """Path of the synthetic schema fixture shipped with the package."""
    return Path(str(resources.files("damcmc") / "fixtures" / "iv_fixture.csv"))


def load_iv_csv(
    path, column_map: dict | None = None, normalize_latitude: bool = False
) -> IvDataset:
    """Load and validate the IV dataset.

    ``column_map`` overrides entries of DEFAULT_COLUMN_MAP (model field ->
    CSV column). Rows with missing, non-numeric or non-finite values raise
    MalformedRow with the 1-based file line; dummies must be exactly 0 or 1
    and at most one may be set per row. A sample size other than 64 only
    warns, so dataset variants can be used deliberately.

    ``normalize_latitude`` applies abs(latitude)/90 after ingestion; by
    default the column is used as provided.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"IV dataset not found: {path}")
    colmap = dict(DEFAULT_COLUMN_MAP)
    if column_map:
        unknown = set(column_map) - set(FIELDS)
        if unknown:
            raise MissingColumn(f"unknown model fields in column map: {sorted(unknown)}")
        colmap.update(column_map)

    records: list[dict] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyInput(f"{path} has no header row")
        header = set(reader.fieldnames)
        for field, column in colmap.items():
            if column not in header:
                raise MissingColumn(column)
        for row in reader:
            line = reader.line_num
            rec = {}
            for field, column in colmap.items():
                raw = (row.get(column) or "").strip()
                if raw == "":
                    raise MalformedRow(line, f"empty value in column {column!r}")
                try:
                    val = float(raw)
                except ValueError:
                    raise MalformedRow(line, f"non-numeric value {raw!r} in column {column!r}")
                if not math.isfinite(val):
                    raise MalformedRow(line, f"non-finite value in column {column!r}")
                rec[field] = val
            for field in DUMMY_FIELDS:
                if rec[field] not in (0.0, 1.0):
                    raise MalformedRow(
                        line, f"dummy {colmap[field]!r} must be 0 or 1, got {rec[field]}"
                    )
            if sum(rec[field] for field in DUMMY_FIELDS) > 1.0:
                raise MalformedRow(line, "more than one continent dummy is set")
            records.append(rec)

    if not records:
        raise EmptyInput(f"{path} contains a header but no data rows")
    if len(records) != EXPECTED_SAMPLE_SIZE:
        warnings.warn(
            f"IV dataset has {len(records)} rows; the benchmark sample has "
            f"{EXPECTED_SAMPLE_SIZE}. Proceeding anyway.",
            stacklevel=2,
        )

    lat = np.array([r["latitude"] for r in records])
    if normalize_latitude:
        lat = np.abs(lat) / 90.0
    controls = np.column_stack(
        [
            lat,
            np.array([r["africa"] for r in records]),
            np.array([r["asia"] for r in records]),
            np.array([r["other_cont"] for r in records]),
        ]
    )
    return IvDataset(
        y=np.array([r["y"] for r in records]),
        x=np.array([r["x"] for r in records]),
        z=np.array([r["z"] for r in records]),
        controls=controls,
        control_names=CONTROL_NAMES,
    )
