"""The three serialization grammars used downstream of ingestion.

Blocking strings substitute the empty string for missing values; the two
matching serializers (structured pair text and the match prompt) substitute
the word "Unknown". All three are pure functions of the record values.
"""

from __future__ import annotations

from datetime import date
from importlib import resources

from .records import PatientRecord, RecordPair

# Blocking serialization order: the five low-missingness fields.
BLOCKING_FIELDS = ("first_name", "middle_name", "last_name", "birth_date", "sex")

# Canonical attribute order and labels for the matching serializers.
_MATCH_ATTRS = (
    ("first_name", "FirstName", "First Name"),
    ("middle_name", "MiddleName", "Middle Name"),
    ("last_name", "LastName", "Last Name"),
    ("birth_date", "DateOfBirth", "Date of Birth"),
    ("ssn", "SSN", "SSN"),
    ("sex", "Sex", "Sex"),
    ("address", "Address", "Address"),
)

PROMPT_TEMPLATE_VERSION = "v1"

_template_cache: str | None = None


def _render_value(value) -> str:
    if isinstance(value, date):
        return value.isoformat()
    return value


def serialize_for_blocking(record: PatientRecord) -> str:
    """Space-joined first/middle/last/birth_date/sex, missing as empty string.

    SSN and address are excluded (too often missing to help the embedding);
    dates render as YYYY-MM-DD. Adjacent separators are preserved, so a
    missing middle name yields two consecutive spaces.
    """
    parts = []
    for name in BLOCKING_FIELDS:
        value = record.field(name)
        parts.append("" if value is None else _render_value(value))
    return " ".join(parts)


def serialize_record_structured(record: PatientRecord) -> str:
    """One record as "[COL] <Attr> [VAL] <value>" segments, canonical order."""
    parts = []
    for field, attr, _ in _MATCH_ATTRS:
        value = record.field(field)
        rendered = "Unknown" if value is None else _render_value(value)
        parts.append(f"[COL] {attr} [VAL] {rendered}")
    return " ".join(parts)


def serialize_pair_ditto(pair: RecordPair) -> str:
    """Structured pair text: "[CLS] <left> [SEP] <right> [SEP]".

    The bracket markers are emitted as literal text for export; no tokenizer
    is involved.
    """
    return (
        f"[CLS] {serialize_record_structured(pair.left)} "
        f"[SEP] {serialize_record_structured(pair.right)} [SEP]"
    )


def _load_template() -> str:
    global _template_cache
    if _template_cache is None:
        _template_cache = (
            resources.files("reclink.templates")
            .joinpath(f"match_prompt_{PROMPT_TEMPLATE_VERSION}.txt")
            .read_text(encoding="utf-8")
        )
    return _template_cache


def render_match_prompt(pair: RecordPair) -> str:
    """Instantiate the versioned match-prompt template for one pair.

    Byte-deterministic: the same pair always renders the same prompt.
    Missing fields render as "Unknown".
    """
    values = {}
    for prefix, record in (("r1", pair.left), ("r2", pair.right)):
        for field, _, _ in _MATCH_ATTRS:
            value = record.field(field)
            values[f"{prefix}_{field}"] = (
                "Unknown" if value is None else _render_value(value)
            )
    return _load_template().format(**values)
