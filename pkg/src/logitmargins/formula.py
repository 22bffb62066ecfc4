"""Model formula parsing and design-matrix construction.

Grammar::

    formula := ident "~" term ("+" term)*
    term    := "C(" ident ")" | ident | ident "^2"

Whitespace is insignificant.  ``C(x)`` marks a factor (dummy coding against
a reference level), a bare ``x`` enters linearly, and ``x^2`` adds the
square of ``x`` as an extra column tied to its base term.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .dataset import BinaryColumn, CategoricalColumn, ContinuousColumn, Dataset


class FormulaError(ValueError):
    """Parse or model-structure error; ``position`` indexes into the source text."""

    def __init__(self, message: str, position: Optional[int] = None):
        super().__init__(message)
        self.position = position


@dataclass(frozen=True)
class Factor:
    var: str


@dataclass(frozen=True)
class Linear:
    var: str


@dataclass(frozen=True)
class Power:
    var: str
    exponent: int = 2


Term = Union[Factor, Linear, Power]


@dataclass(frozen=True)
class ModelSpec:
    response: str
    terms: tuple[Term, ...]

    @property
    def variables(self) -> tuple[str, ...]:
        seen: list[str] = []
        for t in self.terms:
            if t.var not in seen:
                seen.append(t.var)
        return tuple(seen)


_TOKEN_RE = re.compile(r"(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
                       r"|(?P<num>\d+)"
                       r"|(?P<op>[~+()^])")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaError(f"unexpected character {text[pos]!r} at position {pos}", pos)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self, kind: str, value: Optional[str] = None):
        tk, tv, tp = self.peek()
        if tk != kind or (value is not None and tv != value):
            want = value if value is not None else kind
            raise FormulaError(f"expected {want!r} at position {tp}", tp)
        self.i += 1
        return tv, tp

    def parse(self) -> ModelSpec:
        response, _ = self.take("ident")
        self.take("op", "~")
        terms = [self.term()]
        while True:
            tk, tv, tp = self.peek()
            if tk is None:
                break
            if tk == "op" and tv == "+":
                self.i += 1
                terms.append(self.term())
            else:
                raise FormulaError(f"expected '+' or end of formula at position {tp}", tp)
        return _validated(self.text, response, terms)

    def term(self) -> tuple[Term, int]:
        name, pos = self.take("ident")
        tk, tv, tp = self.peek()
        if name == "C" and tk == "op" and tv == "(":
            self.i += 1
            var, _ = self.take("ident")
            self.take("op", ")")
            return Factor(var), pos
        if tk == "op" and tv == "^":
            self.i += 1
            num, npos = self.take("num")
            if int(num) != 2:
                raise FormulaError(f"unsupported exponent {num} at position {npos}"
                                   " (only ^2 is supported)", npos)
            return Power(name, 2), pos
        return Linear(name), pos


def _validated(text: str, response: str, placed: list[tuple[Term, int]]) -> ModelSpec:
    terms = [t for t, _ in placed]
    for t, pos in placed:
        if t.var == response:
            raise FormulaError(
                f"response {response!r} reused as a predictor at position {pos}", pos)
    seen = set()
    for t, pos in placed:
        if t in seen:
            raise FormulaError(f"duplicate term at position {pos}", pos)
        seen.add(t)
    linears = {t.var for t in terms if isinstance(t, Linear)}
    for t, pos in placed:
        if isinstance(t, Power) and t.var not in linears:
            raise FormulaError(
                f"squared term {t.var}^2 at position {pos} has no bare {t.var} term", pos)
    return ModelSpec(response=response, terms=tuple(terms))


def parse_formula(text: str) -> ModelSpec:
    """Parse a formula string into a :class:`ModelSpec`."""
    return _Parser(text).parse()


# design-column transforms
INTERCEPT = "intercept"
INDICATOR = "indicator"
IDENTITY = "identity"
SQUARE = "square"


@dataclass(frozen=True)
class ColumnRole:
    """Provenance of one design column: its source variable and transform."""

    source: Optional[str]
    transform: str
    level: Optional[str] = None

    @property
    def label(self) -> str:
        if self.transform == INTERCEPT:
            return "intercept"
        if self.transform == INDICATOR:
            return f"{self.source}={self.level}"
        if self.transform == SQUARE:
            return f"{self.source}^2"
        return str(self.source)


@dataclass(frozen=True)
class TermMap:
    """Mapping between raw variables and design-matrix columns.

    Column 0 is always the intercept.  A factor with L levels owns L-1
    indicator columns (the omitted level is recorded in ``reference``), and
    a squared term owns a column locked to the square of its base column.
    This map is what makes counterfactual substitution rewrite every column
    a variable touches, never just one.
    """

    columns: tuple[ColumnRole, ...]
    reference: Mapping[str, str]
    factor_levels: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        if not self.columns or self.columns[0].transform != INTERCEPT:
            raise FormulaError("column 0 must be the intercept")

    @property
    def k(self) -> int:
        return len(self.columns)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.columns)

    @property
    def variables(self) -> tuple[str, ...]:
        seen: list[str] = []
        for c in self.columns:
            if c.source is not None and c.source not in seen:
                seen.append(c.source)
        return tuple(seen)

    def cols_of(self, var: str) -> tuple[int, ...]:
        found = tuple(j for j, c in enumerate(self.columns) if c.source == var)
        if not found:
            raise KeyError(f"variable {var!r} is not in the model")
        return found

    def is_factor(self, var: str) -> bool:
        return var in self.factor_levels

    def indicator_col(self, var: str, level: str) -> Optional[int]:
        for j, c in enumerate(self.columns):
            if c.source == var and c.transform == INDICATOR and c.level == level:
                return j
        return None

    def linear_col(self, var: str) -> int:
        for j, c in enumerate(self.columns):
            if c.source == var and c.transform == IDENTITY:
                return j
        raise KeyError(f"variable {var!r} has no linear column")

    def square_col(self, var: str) -> Optional[int]:
        for j, c in enumerate(self.columns):
            if c.source == var and c.transform == SQUARE:
                return j
        return None

    def to_dict(self) -> dict:
        return {
            "columns": [
                {"source": c.source, "transform": c.transform, "level": c.level}
                for c in self.columns
            ],
            "reference": dict(self.reference),
            "factor_levels": {v: list(lvls) for v, lvls in self.factor_levels.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TermMap":
        cols = tuple(ColumnRole(c["source"], c["transform"], c.get("level"))
                     for c in d["columns"])
        return cls(columns=cols,
                   reference=dict(d["reference"]),
                   factor_levels={v: tuple(lvls) for v, lvls in d["factor_levels"].items()})


@dataclass(frozen=True)
class DesignMatrix:
    """Dense design matrix, response vector, and the term map that built them."""

    X: np.ndarray
    y: np.ndarray
    term_map: TermMap

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1 or self.X.shape[0] != self.y.shape[0]:
            raise FormulaError("design shapes disagree")
        if self.X.shape[1] != self.term_map.k:
            raise FormulaError("design width disagrees with term map")
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]


def build_design(
    ds: Dataset,
    spec: ModelSpec,
    *,
    reference: Optional[Mapping[str, str]] = None,
    levels: Optional[Mapping[str, Sequence[str]]] = None,
) -> DesignMatrix:
    """Build the design matrix and term map for ``spec`` over ``ds``.

    ``reference`` overrides the reference level per factor (default: the
    first level).  ``levels`` overrides the level order per factor, which
    pins the dummy coding when re-applying a stored model to new data.
    """
    reference = dict(reference or {})
    levels = {v: tuple(ls) for v, ls in (levels or {}).items()}

    resp_col = ds.column(spec.response)
    if not isinstance(resp_col, BinaryColumn):
        raise FormulaError(f"response {spec.response!r} must be a binary column")
    y = resp_col.values.astype(np.float64)

    n = ds.n_rows
    roles: list[ColumnRole] = [ColumnRole(None, INTERCEPT)]
    cols: list[np.ndarray] = [np.ones(n)]
    refmap: dict[str, str] = {}
    levmap: dict[str, tuple[str, ...]] = {}

    for term in spec.terms:
        col = ds.column(term.var)
        if isinstance(term, Factor):
            if not isinstance(col, CategoricalColumn):
                raise FormulaError(
                    f"C({term.var}) requires a categorical column, got {col.kind}")
            lv = levels.get(term.var, col.levels)
            missing = [l for l in lv if l not in col.levels]
            if missing:
                raise FormulaError(f"declared level(s) {missing} absent from {term.var!r}")
            observed = {col.levels[c] for c in np.unique(col.codes)}
            if len(observed) < 2:
                raise FormulaError(f"factor {term.var!r} has fewer than 2 observed levels")
            ref = reference.get(term.var, lv[0])
            if ref not in lv:
                raise FormulaError(f"reference level {ref!r} unknown for {term.var!r}")
            level_of_row = np.array(col.levels, dtype=object)[col.codes]
            for level in lv:
                if level == ref:
                    continue
                roles.append(ColumnRole(term.var, INDICATOR, level))
                cols.append((level_of_row == level).astype(np.float64))
            refmap[term.var] = ref
            levmap[term.var] = tuple(lv)
        elif isinstance(term, Linear):
            if isinstance(col, CategoricalColumn):
                raise FormulaError(
                    f"categorical column {term.var!r} must be wrapped in C()")
            roles.append(ColumnRole(term.var, IDENTITY))
            cols.append(col.values.astype(np.float64))
        else:  # Power
            if not isinstance(col, ContinuousColumn):
                raise FormulaError(f"squared term needs a continuous column, got {col.kind}")
            roles.append(ColumnRole(term.var, SQUARE))
            cols.append(col.values.astype(np.float64) ** 2)

    term_map = TermMap(columns=tuple(roles), reference=refmap, factor_levels=levmap)
    X = np.column_stack(cols)
    return DesignMatrix(X=X, y=y, term_map=term_map)


def _check_value(term_map: TermMap, var: str, value):
    """Validate a substitution target; returns ('factor', level) or ('cont', float)."""
    term_map.cols_of(var)  # raises KeyError for unknown variables
    if term_map.is_factor(var):
        if value not in term_map.factor_levels[var]:
            raise KeyError(f"unknown level {value!r} for factor {var!r}")
        return "factor", value
    v = float(value)
    if not np.isfinite(v):
        raise ValueError(f"non-finite value {value!r} for {var!r}")
    return "cont", v


def substitute(row: np.ndarray, term_map: TermMap, var: str, value) -> np.ndarray:
    """Return a copy of a design row with ``var`` counterfactually set.

    Every column sourced from ``var`` is rewritten together: indicators flip
    to the new level, the identity column takes the new value, and a square
    column takes its square.  Columns owned by other variables are untouched.
    """
    kind, val = _check_value(term_map, var, value)
    out = np.array(row, dtype=np.float64, copy=True)
    if kind == "factor":
        for level in term_map.factor_levels[var]:
            j = term_map.indicator_col(var, level)
            if j is not None:
                out[j] = 1.0 if level == val else 0.0
    else:
        out[term_map.linear_col(var)] = val
        sq = term_map.square_col(var)
        if sq is not None:
            out[sq] = val * val
    return out


def substitute_matrix(X: np.ndarray, term_map: TermMap, var: str, value) -> np.ndarray:
    """Vectorized :func:`substitute` applied to every row of ``X``."""
    kind, val = _check_value(term_map, var, value)
    out = np.array(X, dtype=np.float64, copy=True)
    if kind == "factor":
        for level in term_map.factor_levels[var]:
            j = term_map.indicator_col(var, level)
            if j is not None:
                out[:, j] = 1.0 if level == val else 0.0
    else:
        out[:, term_map.linear_col(var)] = val
        sq = term_map.square_col(var)
        if sq is not None:
            out[:, sq] = val * val
    return out
