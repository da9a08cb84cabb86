"""Typed cohort records with explicit missing values, plus CSV ingestion.

Missing is an explicit variant (a singleton), never a sentinel number:
denied or skipped answers must be distinguishable from any real value.
Out-of-range scalars are kept and flagged, not dropped; cleaning is the
analyst's decision.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

from ..canonical import digest
from .dictionary import DataDictionary


class CohortError(ValueError):
    pass


class _MissingType:
    """Singleton marker for a missing value."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __bool__(self):
        return False


MISSING = _MissingType()

# Category/ordinal values are int indices into the attribute's category
# list; scalars are floats.
Value = Union[int, float, _MissingType]


@dataclass
class SubjectRecord:
    id: str
    values: dict[str, Value] = field(default_factory=dict)

    def get(self, name: str) -> Value:
        return self.values.get(name, MISSING)

    def is_missing(self, name: str) -> bool:
        return self.get(name) is MISSING


@dataclass
class IngestStats:
    n_rows: int = 0
    n_accepted: int = 0
    n_rejected: int = 0
    missing: dict[str, int] = field(default_factory=dict)
    out_of_range: list[tuple[str, str]] = field(default_factory=list)  # (subject id, attr)
    rejected_rows: list[tuple[int, str]] = field(default_factory=list)  # (row number, reason)


@dataclass
class Cohort:
    """Immutable-after-load collection of typed subject records."""

    dictionary: DataDictionary
    subjects: list[SubjectRecord] = field(default_factory=list)
    wave: str = ""

    def __post_init__(self):
        ids = [s.id for s in self.subjects]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise CohortError(f"duplicate subject ids: {dupes[:5]}")
        self._by_id = {s.id: s for s in self.subjects}
        for s in self.subjects:
            unknown = set(s.values) - set(self.dictionary.names())
            if unknown:
                raise CohortError(f"subject {s.id}: values for unknown attributes {sorted(unknown)}")

    def __len__(self) -> int:
        return len(self.subjects)

    def subject(self, subject_id: str) -> SubjectRecord:
        return self._by_id[subject_id]

    def ids(self) -> list[str]:
        return [s.id for s in self.subjects]

    def column(self, attr: str) -> list[Value]:
        if attr not in self.dictionary:
            raise KeyError(f"unknown attribute {attr!r}")
        return [s.get(attr) for s in self.subjects]

    def to_json(self) -> dict:
        def enc(v: Value):
            return None if v is MISSING else v

        return {
            "wave": self.wave,
            "dictionary": self.dictionary.to_json(),
            "subjects": [
                {"id": s.id, "values": {k: enc(v) for k, v in s.values.items()}}
                for s in self.subjects
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Cohort":
        dictionary = DataDictionary.from_json(obj["dictionary"])
        subjects = []
        for srec in obj["subjects"]:
            values: dict[str, Value] = {}
            for k, v in srec["values"].items():
                if v is None:
                    values[k] = MISSING
                elif dictionary[k].kind == "scalar":
                    values[k] = float(v)
                else:
                    values[k] = int(v)
            subjects.append(SubjectRecord(id=srec["id"], values=values))
        return cls(dictionary=dictionary, subjects=subjects, wave=obj.get("wave", ""))

    def content_digest(self) -> str:
        return digest(self.to_json())


ID_COLUMN = "id"


def _parse_cell(raw: str, attr, stats: IngestStats, subject_id: str) -> Value:
    token = raw.strip()
    if token == "" or token in attr.missing_codes:
        stats.missing[attr.name] = stats.missing.get(attr.name, 0) + 1
        return MISSING
    if attr.kind == "scalar":
        value = float(token)
        if attr.valid_range is not None:
            lo, hi = attr.valid_range
            if not lo <= value <= hi:
                stats.out_of_range.append((subject_id, attr.name))
        return value
    # nominal / ordinal: accept the category label, or a bare index
    if token in attr.categories:
        return attr.categories.index(token)
    if token.isdigit() and int(token) < attr.n_categories:
        return int(token)
    raise ValueError(f"{attr.name!r}: unknown category {token!r}")


def load_cohort(data_path: str | Path, dictionary: DataDictionary,
                wave: str = "", sep: str = ",") -> tuple[Cohort, IngestStats]:
    """Ingest a delimiter-separated file (header row = attribute names).

    Every cell is typed or MISSING. Unparseable rows are reported with
    their row number and skipped; ingestion continues. An 'id' column is
    used for subject ids when present, otherwise row numbers are used.
    """
    text = Path(data_path).read_text(encoding="utf-8")
    return parse_cohort(text, dictionary, wave=wave, sep=sep)


def parse_cohort(text: str, dictionary: DataDictionary,
                 wave: str = "", sep: str = ",") -> tuple[Cohort, IngestStats]:
    stats = IngestStats()
    reader = csv.reader(io.StringIO(text), delimiter=sep)
    rows = list(reader)
    if not rows or (len(rows) == 1 and rows[0] in ([], [""])):
        return Cohort(dictionary=dictionary, subjects=[], wave=wave), stats

    header = [h.strip() for h in rows[0]]
    unknown = [h for h in header if h != ID_COLUMN and h not in dictionary]
    if unknown:
        raise CohortError(f"unknown attribute columns: {unknown}")

    subjects: list[SubjectRecord] = []
    for row_no, row in enumerate(rows[1:], start=2):
        if not row or all(c.strip() == "" for c in row):
            continue
        stats.n_rows += 1
        try:
            if len(row) != len(header):
                raise ValueError(f"expected {len(header)} cells, got {len(row)}")
            cells = dict(zip(header, row))
            subject_id = cells.pop(ID_COLUMN, "").strip() or f"row{row_no}"
            values: dict[str, Value] = {}
            for name, raw in cells.items():
                values[name] = _parse_cell(raw, dictionary[name], stats, subject_id)
            subjects.append(SubjectRecord(id=subject_id, values=values))
            stats.n_accepted += 1
        except ValueError as exc:
            stats.n_rejected += 1
            stats.rejected_rows.append((row_no, str(exc)))

    return Cohort(dictionary=dictionary, subjects=subjects, wave=wave), stats


def format_value(value: Value, attr) -> str:
    if value is MISSING:
        return ""
    if attr.kind == "scalar":
        return repr(float(value))
    return attr.categories[int(value)]


def write_cohort(cohort: Cohort, path: str | Path, sep: str = ",") -> None:
    """Write a cohort back to delimiter-separated text (round-trips with
    load_cohort, missing cells written as empty strings)."""
    names = cohort.dictionary.names()
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=sep, lineterminator="\n")
    writer.writerow([ID_COLUMN] + names)
    for s in cohort.subjects:
        writer.writerow([s.id] + [format_value(s.get(n), cohort.dictionary[n]) for n in names])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def subset(cohort: Cohort, subject_ids: Iterable[str], wave: str | None = None) -> Cohort:
    """New cohort restricted to the given subject ids (original order kept)."""
    wanted = set(subject_ids)
    return Cohort(
        dictionary=cohort.dictionary,
        subjects=[s for s in cohort.subjects if s.id in wanted],
        wave=cohort.wave if wave is None else wave,
    )
