"""Record and dataset model plus flat-file ingestion.

Records are immutable after parsing; missing values are None. Names are
uppercased at ingestion so phonetic and exact comparisons are
case-insensitive by construction.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .errors import DataError

# The seven demographic fields, in the canonical order used by the matching
# serializers and the review UI.
FIELDS = (
    "first_name",
    "middle_name",
    "last_name",
    "birth_date",
    "ssn",
    "sex",
    "address",
)

NAME_FIELDS = ("first_name", "middle_name", "last_name")

_SSN_RE = re.compile(r"^[0-9]{9}$")
_SSN_DASHED_RE = re.compile(r"^[0-9]{3}-[0-9]{2}-[0-9]{4}$")


@dataclass(frozen=True)
class PatientRecord:
    """One demographic record from source A or B."""

    record_id: str
    source: str
    first_name: str | None = None
    middle_name: str | None = None
    last_name: str | None = None
    birth_date: date | None = None
    sex: str | None = None
    ssn: str | None = None
    address: str | None = None

    def __post_init__(self):
        if not self.record_id:
            raise DataError("record_id must be non-empty")
        if self.source not in ("A", "B"):
            raise DataError(f"source must be 'A' or 'B', got {self.source!r}")
        if self.ssn is not None and not _SSN_RE.match(self.ssn):
            raise DataError(f"ssn must be 9 ASCII digits, got {self.ssn!r}")
        if self.birth_date is not None and not isinstance(self.birth_date, date):
            raise DataError("birth_date must be a datetime.date")

    def field(self, name: str):
        """Value of one of the seven demographic fields (None if missing)."""
        return getattr(self, name)


@dataclass(frozen=True)
class RecordPair:
    """An (A-record, B-record) candidate pair."""

    left: PatientRecord
    right: PatientRecord

    def __post_init__(self):
        if self.left.source != "A" or self.right.source != "B":
            raise DataError(
                "pair must join an A-record (left) to a B-record (right), got "
                f"{self.left.source}/{self.right.source}"
            )

    @property
    def key(self) -> tuple[str, str]:
        return (self.left.record_id, self.right.record_id)


@dataclass(frozen=True)
class Dataset:
    """All records of one source, with file provenance."""

    records: tuple[PatientRecord, ...]
    source: str
    path: str
    row_count: int

    def __post_init__(self):
        for r in self.records:
            if r.source != self.source:
                raise DataError(
                    f"record {r.record_id} has source {r.source}, "
                    f"dataset is {self.source}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def by_id(self) -> dict[str, PatientRecord]:
        return {r.record_id: r for r in self.records}


def _normalize_cell(value) -> str | None:
    """Trim whitespace; empty, absent and the literal NULL become missing."""
    if value is None:
        return None
    text = str(value).strip()
    if text == "" or text.upper() == "NULL":
        return None
    return text


def _parse_row(raw: dict, source: str, row_num: int, path: str,
               strict: bool) -> PatientRecord:
    record_id = _normalize_cell(raw.get("record_id"))
    if record_id is None:
        raise DataError("missing record_id", path=path, row=row_num)

    values: dict[str, object] = {}
    for name in NAME_FIELDS:
        val = _normalize_cell(raw.get(name))
        values[name] = val.upper() if val is not None else None

    dob_text = _normalize_cell(raw.get("birth_date"))
    if dob_text is None:
        values["birth_date"] = None
    else:
        try:
            values["birth_date"] = date.fromisoformat(dob_text)
        except ValueError:
            if strict:
                raise DataError(
                    f"malformed birth_date {dob_text!r}", path=path, row=row_num
                ) from None
            values["birth_date"] = None

    values["sex"] = _normalize_cell(raw.get("sex"))

    ssn = _normalize_cell(raw.get("ssn"))
    if ssn is not None:
        if _SSN_DASHED_RE.match(ssn):
            ssn = ssn.replace("-", "")
        if not _SSN_RE.match(ssn):
            if strict:
                raise DataError(
                    f"ssn must be 9 digits, got {ssn!r}", path=path, row=row_num
                )
            ssn = None
    values["ssn"] = ssn

    values["address"] = _normalize_cell(raw.get("address"))

    return PatientRecord(record_id=record_id, source=source, **values)


def parse_records(path: str | Path, source: str, fmt: str = "csv",
                  strict: bool = True) -> Dataset:
    """Parse a CSV or JSON Lines file into a Dataset.

    CSV files must carry a header naming record_id and the seven demographic
    fields; unknown extra columns are ignored. JSON Lines rows may omit keys
    (absent means missing). In strict mode (the default) malformed dates and
    SSNs reject the file with the offending row number; lenient mode coerces
    them to missing.
    """
    path = Path(path)
    if fmt not in ("csv", "jsonl"):
        raise DataError(f"unknown format {fmt!r}", path=str(path))
    if not path.exists():
        raise DataError("file not found", path=str(path))

    rows: list[tuple[int, dict]] = []
    if fmt == "csv":
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = set(reader.fieldnames or [])
            required = {"record_id", *FIELDS}
            missing_cols = required - header
            if missing_cols:
                raise DataError(
                    f"header is missing columns: {sorted(missing_cols)}",
                    path=str(path),
                )
            # Row numbers are 1-based over data rows (header excluded).
            for i, row in enumerate(reader, start=1):
                rows.append((i, row))
    else:
        with path.open(encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(
                        f"invalid JSON: {exc}", path=str(path), row=i
                    ) from None
                if not isinstance(obj, dict):
                    raise DataError("row is not an object", path=str(path), row=i)
                rows.append((i, obj))

    records = []
    seen: dict[str, int] = {}
    for row_num, raw in rows:
        rec = _parse_row(raw, source, row_num, str(path), strict)
        if rec.record_id in seen:
            raise DataError(
                f"duplicate record_id {rec.record_id!r} "
                f"(first seen at row {seen[rec.record_id]})",
                path=str(path), row=row_num,
            )
        seen[rec.record_id] = row_num
        records.append(rec)

    return Dataset(
        records=tuple(records), source=source,
        path=str(path), row_count=len(records),
    )


def write_records_csv(records, path: str | Path) -> None:
    """Write records in the ingestion CSV schema (missing values empty)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", *FIELDS])
        for r in records:
            row = [r.record_id]
            for name in FIELDS:
                val = r.field(name)
                if val is None:
                    row.append("")
                elif isinstance(val, date):
                    row.append(val.isoformat())
                else:
                    row.append(val)
            writer.writerow(row)
