"""Typed tabular data: CSV loading, listwise deletion, descriptive summaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

MISSING_TOKENS = ("", "NA")

KINDS = ("continuous", "categorical", "binary")


class DataError(ValueError):
    """Raised for unreadable, malformed, or contract-violating input data."""


@dataclass(frozen=True)
class ColumnSpec:
    """Declared name and kind of one column, with optional fixed level order."""

    name: str
    kind: str
    levels: Optional[tuple[str, ...]] = None
    units: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown column kind {self.kind!r} for {self.name!r}")
        if self.levels is not None and self.kind != "categorical":
            raise DataError(f"levels given for non-categorical column {self.name!r}")


@dataclass(frozen=True)
class ContinuousColumn:
    name: str
    values: np.ndarray
    units: Optional[str] = None
    kind: str = field(default="continuous", init=False)

    @property
    def n(self) -> int:
        return len(self.values)

    def token(self, i: int) -> str:
        return repr(float(self.values[i]))


@dataclass(frozen=True)
class CategoricalColumn:
    name: str
    levels: tuple[str, ...]
    codes: np.ndarray
    kind: str = field(default="categorical", init=False)

    def __post_init__(self):
        if len(set(self.levels)) != len(self.levels):
            raise DataError(f"duplicate levels in column {self.name!r}")
        if self.codes.size and (self.codes.min() < 0 or self.codes.max() >= len(self.levels)):
            raise DataError(f"categorical codes out of range in column {self.name!r}")

    @property
    def n(self) -> int:
        return len(self.codes)

    def token(self, i: int) -> str:
        return self.levels[self.codes[i]]


@dataclass(frozen=True)
class BinaryColumn:
    name: str
    values: np.ndarray
    kind: str = field(default="binary", init=False)

    def __post_init__(self):
        bad = ~np.isin(self.values, (0.0, 1.0))
        if bad.any():
            raise DataError(f"binary column {self.name!r} contains values other than 0/1")

    @property
    def n(self) -> int:
        return len(self.values)

    def token(self, i: int) -> str:
        return str(int(self.values[i]))


Column = Union[ContinuousColumn, CategoricalColumn, BinaryColumn]


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of equally long typed columns.

    ``n_dropped`` records how many rows listwise deletion removed at load
    time; it is metadata and does not participate in equality.
    """

    name: str
    columns: tuple[Column, ...]
    n_dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise DataError("column names are not unique")
        if any(not c.name for c in self.columns):
            raise DataError("empty column name")
        lengths = {c.n for c in self.columns}
        if len(lengths) > 1:
            raise DataError(f"ragged columns: lengths {sorted(lengths)}")
        for c in self.columns:
            arr = c.codes if isinstance(c, CategoricalColumn) else c.values
            arr.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.columns[0].n if self.columns else 0

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise DataError(f"no column named {name!r}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.name != other.name or self.names != other.names:
            return False
        for a, b in zip(self.columns, other.columns):
            if a.kind != b.kind:
                return False
            if isinstance(a, CategoricalColumn):
                if a.levels != b.levels or not np.array_equal(a.codes, b.codes):
                    return False
            elif not np.array_equal(a.values, b.values):
                return False
        return True


@dataclass(frozen=True)
class SummaryRow:
    """One descriptive line: a percentage for levels/binaries, moments otherwise."""

    variable: str
    level: Optional[str]
    value: float  # percentage for categorical levels and binaries, mean otherwise
    sd: Optional[float]
    vmin: float
    vmax: float


@dataclass(frozen=True)
class SummaryTable:
    rows: tuple[SummaryRow, ...]


def _normalize_schema(schema: Sequence) -> list[ColumnSpec]:
    out = []
    for entry in schema:
        if isinstance(entry, ColumnSpec):
            out.append(entry)
        else:
            name, kind = entry
            out.append(ColumnSpec(name, kind))
    return out


def load_csv(path, schema: Sequence, name: Optional[str] = None) -> Dataset:
    """Load a typed dataset from a CSV file.

    ``schema`` lists ``(name, kind)`` pairs or :class:`ColumnSpec` objects;
    kinds are ``continuous``, ``categorical``, or ``binary``.  Rows with a
    missing value (empty field or ``NA``) in any schema column are dropped,
    and the count of removed rows is recorded on the returned dataset.

    Raises :class:`DataError` for unreadable files, headers that do not
    cover the schema, non-numeric tokens in numeric columns, binary values
    other than 0/1, and datasets left empty after filtering.
    """
    specs = _normalize_schema(schema)
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        col_index = {}
        for spec in specs:
            if spec.name not in header:
                raise DataError(f"{path}: header is missing column {spec.name!r}")
            col_index[spec.name] = header.index(spec.name)
        raw: list[list[str]] = []
        n_dropped = 0
        for row in reader:
            if not row:
                continue
            cells = [row[col_index[s.name]].strip() if col_index[s.name] < len(row) else ""
                     for s in specs]
            if any(c in MISSING_TOKENS for c in cells):
                n_dropped += 1
                continue
            raw.append(cells)
    if not raw:
        raise DataError(f"{path}: no rows left after listwise deletion")

    columns: list[Column] = []
    for j, spec in enumerate(specs):
        tokens = [r[j] for r in raw]
        columns.append(_make_column(spec, tokens))
    return Dataset(name=name or str(path), columns=tuple(columns), n_dropped=n_dropped)


def _make_column(spec: ColumnSpec, tokens: list[str]) -> Column:
    if spec.kind == "continuous":
        try:
            values = np.array([float(t) for t in tokens], dtype=np.float64)
        except ValueError:
            bad = next(t for t in tokens if not _is_float(t))
            raise DataError(
                f"non-numeric token {bad!r} in continuous column {spec.name!r}") from None
        if not np.isfinite(values).all():
            raise DataError(f"non-finite value in continuous column {spec.name!r}")
        return ContinuousColumn(spec.name, values, spec.units)
    if spec.kind == "binary":
        try:
            values = np.array([float(t) for t in tokens], dtype=np.float64)
        except ValueError:
            bad = next(t for t in tokens if not _is_float(t))
            raise DataError(
                f"non-numeric token {bad!r} in binary column {spec.name!r}") from None
        bad_mask = ~np.isin(values, (0.0, 1.0))
        if bad_mask.any():
            i = int(np.argmax(bad_mask))
            raise DataError(
                f"invalid binary value {tokens[i]!r} in column {spec.name!r}")
        return BinaryColumn(spec.name, values)
    # categorical: declared level order wins, otherwise first appearance
    if spec.levels is not None:
        levels = list(spec.levels)
        index = {lv: i for i, lv in enumerate(levels)}
        codes = np.empty(len(tokens), dtype=np.int64)
        for i, t in enumerate(tokens):
            if t not in index:
                raise DataError(
                    f"unknown level {t!r} for categorical column {spec.name!r}")
            codes[i] = index[t]
    else:
        levels = []
        index = {}
        codes = np.empty(len(tokens), dtype=np.int64)
        for i, t in enumerate(tokens):
            if t not in index:
                index[t] = len(levels)
                levels.append(t)
            codes[i] = index[t]
    return CategoricalColumn(spec.name, tuple(levels), codes)


def _is_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def to_csv(ds: Dataset, path) -> None:
    """Write the dataset back out; reloading with the same schema round-trips."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ds.names)
        for i in range(ds.n_rows):
            writer.writerow([c.token(i) for c in ds.columns])


def schema_of(ds: Dataset) -> list[ColumnSpec]:
    """Schema that reloads this dataset with identical typing and level order."""
    specs = []
    for c in ds.columns:
        if isinstance(c, CategoricalColumn):
            specs.append(ColumnSpec(c.name, "categorical", levels=c.levels))
        elif isinstance(c, BinaryColumn):
            specs.append(ColumnSpec(c.name, "binary"))
        else:
            specs.append(ColumnSpec(c.name, "continuous", units=c.units))
    return specs


def sniff_schema(path) -> list[ColumnSpec]:
    """Infer column kinds from file contents.

    Values all in {0,1} make a binary column, anything fully numeric is
    continuous, and everything else is categorical.  Missing tokens are
    ignored during inference.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        seen: list[list[str]] = [[] for _ in header]
        for row in reader:
            for j in range(min(len(row), len(header))):
                t = row[j].strip()
                if t not in MISSING_TOKENS:
                    seen[j].append(t)
    specs = []
    for name, tokens in zip(header, seen):
        if tokens and all(t in ("0", "1") for t in tokens):
            specs.append(ColumnSpec(name, "binary"))
        elif tokens and all(_is_float(t) for t in tokens):
            specs.append(ColumnSpec(name, "continuous"))
        else:
            specs.append(ColumnSpec(name, "categorical"))
    return specs


def summarize(ds: Dataset) -> SummaryTable:
    """Descriptive table: level percentages for factors and binaries, moments
    (mean, sample sd, min, max) for continuous columns."""
    if ds.n_rows == 0:
        raise DataError("cannot summarize an empty dataset")
    rows: list[SummaryRow] = []
    for c in ds.columns:
        if isinstance(c, BinaryColumn):
            pct = 100.0 * float(np.mean(c.values))
            rows.append(SummaryRow(c.name, None, pct, None,
                                   float(c.values.min()), float(c.values.max())))
        elif isinstance(c, CategoricalColumn):
            for code, level in enumerate(c.levels):
                share = 100.0 * float(np.mean(c.codes == code))
                rows.append(SummaryRow(c.name, level, share, None, 0.0, 1.0))
        else:
            mean = float(np.mean(c.values))
            sd = float(np.std(c.values, ddof=1)) if c.n > 1 else None
            rows.append(SummaryRow(c.name, None, mean, sd,
                                   float(c.values.min()), float(c.values.max())))
    return SummaryTable(tuple(rows))


def filter_levels(ds: Dataset, var: str, keep: Sequence[str]) -> Dataset:
    """Keep only rows whose ``var`` value is in ``keep``; relevel the column.

    The retained level order follows the column's existing order restricted
    to ``keep``.
    """
    col = ds.column(var)
    if not isinstance(col, CategoricalColumn):
        raise DataError(f"{var!r} is not categorical")
    unknown = [lv for lv in keep if lv not in col.levels]
    if unknown:
        raise DataError(f"unknown level(s) {unknown} for {var!r}")
    kept_levels = tuple(lv for lv in col.levels if lv in set(keep))
    keep_codes = {col.levels.index(lv) for lv in kept_levels}
    mask = np.isin(col.codes, sorted(keep_codes))
    if not mask.any():
        raise DataError(f"no rows left after filtering {var!r}")
    recode = {col.levels.index(lv): i for i, lv in enumerate(kept_levels)}
    new_cols: list[Column] = []
    for c in ds.columns:
        if c.name == var:
            codes = np.array([recode[int(k)] for k in col.codes[mask]], dtype=np.int64)
            new_cols.append(CategoricalColumn(c.name, kept_levels, codes))
        elif isinstance(c, CategoricalColumn):
            new_cols.append(CategoricalColumn(c.name, c.levels, c.codes[mask].copy()))
        elif isinstance(c, BinaryColumn):
            new_cols.append(BinaryColumn(c.name, c.values[mask].copy()))
        else:
            new_cols.append(ContinuousColumn(c.name, c.values[mask].copy(), c.units))
    return Dataset(name=ds.name, columns=tuple(new_cols))
