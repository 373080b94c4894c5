"""CSV dataset ingestion under a declarative schema, plus summary statistics."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

try:
    import tomllib as toml_reader
except ModuleNotFoundError:  # Python < 3.11
    import tomli as toml_reader

from .errors import (
    ConfigError,
    EmptyDataset,
    MalformedCsv,
    MissingColumn,
    UnmappableLabel,
)


class State(enum.Enum):
    AVAILABLE = "Available"
    OBSOLETE = "Obsolete"

    @classmethod
    def parse(cls, text: str) -> "State":
        for state in cls:
            if state.value.lower() == text.strip().lower():
                return state
        raise ConfigError(f"unknown state {text!r}; expected Available or Obsolete")


@dataclass(frozen=True)
class DatasetSchema:
    """Declarative description of one tabular dataset."""

    name: str
    entity_noun: str
    feature_columns: tuple[str, ...]
    label_column: str
    label_map: dict[str, State]  # keys normalized: trimmed + lowercased
    positive_class: State
    id_column: str | None = None

    def __post_init__(self):
        if not self.feature_columns:
            raise ConfigError(f"schema {self.name!r}: feature_columns is empty")
        if len(set(self.feature_columns)) != len(self.feature_columns):
            raise ConfigError(f"schema {self.name!r}: duplicate feature columns")
        if self.label_column in self.feature_columns:
            raise ConfigError(
                f"schema {self.name!r}: label_column {self.label_column!r} "
                "also listed as a feature"
            )
        normalized = {k.strip().lower(): v for k, v in self.label_map.items()}
        if set(normalized.values()) != set(State):
            raise ConfigError(
                f"schema {self.name!r}: label_map must map raw values onto "
                "both Available and Obsolete"
            )
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        object.__setattr__(self, "label_map", normalized)

    def map_label(self, raw: str) -> State | None:
        return self.label_map.get(raw.strip().lower())


@dataclass(frozen=True)
class LabeledRecord:
    row_id: str | int
    features: tuple[tuple[str, str], ...]  # (column name, cell text), schema order
    label: State


@dataclass(frozen=True)
class DatasetStats:
    n_total: int
    n_obsolete: int
    n_available: int
    pct_obsolete: float  # 100 * n_obsolete / n_total, half-up to 2 decimals


def load_schema(path: str | Path) -> DatasetSchema:
    """Parse a dataset schema from its TOML config file."""
    raw = Path(path).read_text(encoding="utf-8")
    return parse_schema(raw)


def parse_schema(toml_text: str) -> DatasetSchema:
    try:
        doc = toml_reader.loads(toml_text)
    except toml_reader.TOMLDecodeError as e:
        raise ConfigError(f"bad schema config: {e}") from e
    try:
        return DatasetSchema(
            name=doc["name"],
            entity_noun=doc["entity_noun"],
            feature_columns=tuple(doc["feature_columns"]),
            label_column=doc["label_column"],
            label_map={k: State.parse(v) for k, v in doc["label_map"].items()},
            positive_class=State.parse(doc["positive_class"]),
            id_column=doc.get("id_column"),
        )
    except KeyError as e:
        raise ConfigError(f"schema config missing key {e.args[0]!r}") from e


def schema_to_toml(schema: DatasetSchema) -> str:
    """Render a schema back to its TOML config form (round-trips via parse_schema)."""

    def q(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = [
        f"name = {q(schema.name)}",
        f"entity_noun = {q(schema.entity_noun)}",
        "feature_columns = [" + ", ".join(q(c) for c in schema.feature_columns) + "]",
        f"label_column = {q(schema.label_column)}",
        f"positive_class = {q(schema.positive_class.value)}",
    ]
    if schema.id_column is not None:
        lines.append(f"id_column = {q(schema.id_column)}")
    lines.append("")
    lines.append("[label_map]")
    for raw, state in schema.label_map.items():
        lines.append(f"{q(raw)} = {q(state.value)}")
    return "\n".join(lines) + "\n"


def load_dataset(path: str | Path, schema: DatasetSchema) -> list[LabeledRecord]:
    """Read a CSV export into LabeledRecords, in file order.

    Cell text is kept verbatim apart from trimming leading/trailing whitespace.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path}: file is empty") from None
        except csv.Error as e:
            raise MalformedCsv(1, str(e)) from e

        header = [h.strip() for h in header]
        required = list(schema.feature_columns) + [schema.label_column]
        if schema.id_column:
            required.append(schema.id_column)
        for col in required:
            if col not in header:
                raise MissingColumn(col)
        index = {col: header.index(col) for col in required}

        records: list[LabeledRecord] = []
        seen_ids: set[str] = set()
        position = 0
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as e:
                raise MalformedCsv(reader.line_num, str(e)) from e
            if not row:
                continue
            if len(row) != len(header):
                raise MalformedCsv(
                    reader.line_num,
                    f"expected {len(header)} cells, got {len(row)}",
                )
            if schema.id_column:
                row_id: str | int = row[index[schema.id_column]].strip()
                if row_id in seen_ids:
                    raise MalformedCsv(reader.line_num, f"duplicate row id {row_id!r}")
                seen_ids.add(row_id)
            else:
                row_id = position
            raw_label = row[index[schema.label_column]]
            label = schema.map_label(raw_label)
            if label is None:
                raise UnmappableLabel(row_id, raw_label)
            features = tuple(
                (col, row[index[col]].strip()) for col in schema.feature_columns
            )
            records.append(LabeledRecord(row_id=row_id, features=features, label=label))
            position += 1

    if not records:
        raise EmptyDataset(f"{path}: no data rows")
    return records


def summarize(records: list[LabeledRecord]) -> DatasetStats:
    if not records:
        raise EmptyDataset("cannot summarize an empty record list")
    n_obsolete = sum(1 for r in records if r.label is State.OBSOLETE)
    n_total = len(records)
    pct = Decimal(100 * n_obsolete) / Decimal(n_total)
    pct = float(pct.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))
    return DatasetStats(
        n_total=n_total,
        n_obsolete=n_obsolete,
        n_available=n_total - n_obsolete,
        pct_obsolete=pct,
    )
