"""Data dictionary: typed attribute definitions for cohort records.

Interview-style cohort data mixes nominal, ordinal and scalar attributes.
The dictionary pins down each attribute's kind, category order, valid
range and the raw tokens that mean "missing".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


class DictionaryError(ValueError):
    """Malformed dictionary file or attribute definition."""


class DuplicateAttribute(DictionaryError):
    """Two attributes share a name."""


KINDS = ("nominal", "ordinal", "scalar")


@dataclass(frozen=True)
class AttributeDef:
    """Definition of one cohort attribute.

    Ordinal categories are ordered; values are stored as ranks
    0..len(categories)-1 in dictionary order.
    """

    name: str
    kind: str
    categories: tuple[str, ...] = ()
    unit: str = ""
    valid_range: tuple[float, float] | None = None
    missing_codes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.name:
            raise DictionaryError("attribute name must be non-empty")
        if self.kind not in KINDS:
            raise DictionaryError(f"unknown kind {self.kind!r} for {self.name!r}")
        if self.kind in ("nominal", "ordinal"):
            if not self.categories:
                raise DictionaryError(f"{self.name!r}: categories required for {self.kind}")
            if len(set(self.categories)) != len(self.categories):
                raise DictionaryError(f"{self.name!r}: categories must be unique")
            if self.kind == "ordinal" and len(self.categories) < 2:
                raise DictionaryError(f"{self.name!r}: ordinal needs >= 2 categories")
        else:
            if self.valid_range is not None:
                lo, hi = self.valid_range
                if not lo <= hi:
                    raise DictionaryError(f"{self.name!r}: valid_range min > max")

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    def category_index(self, label: str) -> int:
        try:
            return self.categories.index(label)
        except ValueError:
            raise DictionaryError(f"{self.name!r}: unknown category {label!r}") from None

    def to_json(self) -> dict:
        out: dict = {"name": self.name, "kind": self.kind}
        if self.kind in ("nominal", "ordinal"):
            out["categories"] = list(self.categories)
        else:
            if self.unit:
                out["unit"] = self.unit
            if self.valid_range is not None:
                out["valid_range"] = list(self.valid_range)
        if self.missing_codes:
            out["missing_codes"] = list(self.missing_codes)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "AttributeDef":
        if not isinstance(obj, dict) or "name" not in obj or "kind" not in obj:
            raise DictionaryError(f"attribute entry needs name and kind: {obj!r}")
        rng = obj.get("valid_range")
        return cls(
            name=obj["name"],
            kind=obj["kind"],
            categories=tuple(obj.get("categories", ())),
            unit=obj.get("unit", ""),
            valid_range=tuple(rng) if rng is not None else None,
            missing_codes=tuple(obj.get("missing_codes", ())),
        )


@dataclass
class DataDictionary:
    """Ordered collection of attribute definitions with unique names."""

    attributes: list[AttributeDef] = field(default_factory=list)

    def __post_init__(self):
        seen: set[str] = set()
        for attr in self.attributes:
            if attr.name in seen:
                raise DuplicateAttribute(attr.name)
            seen.add(attr.name)
        self._by_name = {a.name: a for a in self.attributes}

    def __len__(self) -> int:
        return len(self.attributes)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> AttributeDef:
        try:
            return self._by_name[name]
        except KeyError:
            raise KeyError(f"unknown attribute {name!r}") from None

    def names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def kind_counts(self) -> tuple[int, int]:
        """(categorical, scalar) attribute counts; categorical = nominal + ordinal."""
        cat = sum(1 for a in self.attributes if a.kind in ("nominal", "ordinal"))
        return cat, len(self.attributes) - cat

    def to_json(self) -> dict:
        return {"attributes": [a.to_json() for a in self.attributes]}

    @classmethod
    def from_json(cls, obj: dict) -> "DataDictionary":
        if not isinstance(obj, dict) or "attributes" not in obj:
            raise DictionaryError("dictionary file must contain an 'attributes' list")
        return cls([AttributeDef.from_json(a) for a in obj["attributes"]])


def load_dictionary(path: str | Path) -> DataDictionary:
    """Load and validate a dictionary file (JSON with an 'attributes' list)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
        obj = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise DictionaryError(f"cannot parse dictionary {path}: {exc}") from exc
    return DataDictionary.from_json(obj)


def write_dictionary(dictionary: DataDictionary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(dictionary.to_json(), indent=2) + "\n",
                          encoding="utf-8")


def make_dictionary(attrs: Sequence[AttributeDef]) -> DataDictionary:
    return DataDictionary(list(attrs))
