"""Dataset representation and CSV ingestion.

Continuous columns are stored as float64, categorical columns as 0-based
integer level codes (also held as float64 so every column shares a dtype).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "?"})
CATEGORICAL_MAX_DISTINCT = 10


class DataError(ValueError):
    """Malformed input table."""


class MissingValueError(DataError):
    """A cell is empty or holds a missing-value token."""


@dataclass(frozen=True)
class Continuous:
    def __str__(self) -> str:
        return "c"


@dataclass(frozen=True)
class Categorical:
    levels: int

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError(f"categorical variable needs >= 2 levels, got {self.levels}")

    def __str__(self) -> str:
        return f"k{self.levels}"


VariableKind = Continuous | Categorical


def parse_kind(token: str) -> VariableKind:
    """Parse ``c`` or ``kN`` into a variable kind."""
    token = token.strip().lower()
    if token == "c":
        return Continuous()
    if token.startswith("k") and token[1:].isdigit():
        return Categorical(int(token[1:]))
    raise ValueError(f"unknown kind token {token!r}; expected 'c' or 'kN'")


def parse_kinds(spec: str) -> list[VariableKind]:
    return [parse_kind(tok) for tok in spec.split(",")]


@dataclass(frozen=True)
class Dataset:
    """An ``n x J`` table with one kind per column.

    Attributes
    ----------
    values : ndarray of shape (n, J)
        Continuous values, or level codes in ``[0, levels)`` for categorical
        columns.
    kinds : tuple of VariableKind
    names : tuple of str
    inferred : tuple of bool
        Whether each column's kind came from inference rather than an override.
    """

    values: np.ndarray
    kinds: tuple
    names: tuple
    inferred: tuple = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError("values must be a 2-d array")
        n, J = values.shape
        if n < 1 or J < 1:
            raise DataError(f"dataset must be non-empty, got shape {values.shape}")
        if len(self.kinds) != J or len(self.names) != J:
            raise DataError("kinds and names must have one entry per column")
        if np.isnan(values).any():
            raise MissingValueError("dataset contains missing values")
        if not np.isfinite(values).all():
            raise DataError("dataset contains non-finite values")
        for j, kind in enumerate(self.kinds):
            if isinstance(kind, Categorical):
                col = values[:, j]
                if np.any(col != np.round(col)) or col.min() < 0 or col.max() >= kind.levels:
                    raise DataError(
                        f"column {self.names[j]!r}: categorical codes must be integers in "
                        f"[0, {kind.levels})"
                    )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "names", tuple(str(s) for s in self.names))
        inferred = tuple(self.inferred) if self.inferred else (False,) * J
        object.__setattr__(self, "inferred", inferred)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def J(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def is_continuous(self, j: int) -> bool:
        return isinstance(self.kinds[j], Continuous)

    @classmethod
    def from_array(cls, values, kinds=None, names=None) -> "Dataset":
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        J = values.shape[1]
        kinds = tuple(kinds) if kinds is not None else (Continuous(),) * J
        names = tuple(names) if names is not None else tuple(f"X{j + 1}" for j in range(J))
        return cls(values, kinds, names)

    def with_column(self, j: int, column) -> "Dataset":
        values = self.values.copy()
        values[:, j] = column
        return Dataset(values, self.kinds, self.names, self.inferred)

    def drop_column(self, j: int) -> "Dataset":
        keep = [c for c in range(self.J) if c != j]
        return Dataset(
            self.values[:, keep],
            [self.kinds[c] for c in keep],
            [self.names[c] for c in keep],
        )


@dataclass(frozen=True)
class TruePartition:
    labels: np.ndarray
    K: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.size and (labels.min() < 0 or labels.max() >= self.K):
            raise ValueError("labels must lie in [0, K)")
        object.__setattr__(self, "labels", labels)


def _is_missing(token: str) -> bool:
    return token.strip().lower() in MISSING_TOKENS


def _infer_kind(parsed: np.ndarray) -> VariableKind:
    distinct = np.unique(parsed)
    integer_like = bool(np.all(distinct == np.round(distinct)))
    if integer_like and 2 <= distinct.size <= CATEGORICAL_MAX_DISTINCT:
        return Categorical(int(distinct.size))
    return Continuous()


def load_csv(path, kinds: Sequence[VariableKind] | str | None = None) -> Dataset:
    """Read a header-first, comma-separated numeric table.

    Without ``kinds``, a column whose distinct values are at most ten
    integer-like numbers becomes categorical; its sorted distinct values are
    recoded to ``0..L-1``. With an explicit ``kN`` override the raw values must
    already be codes in ``[0, N)``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")
    J = len(header)
    for lineno, row in enumerate(body, start=2):
        if len(row) != J:
            raise DataError(f"{path}:{lineno}: expected {J} fields, got {len(row)}")
        for col, tok in enumerate(row):
            if _is_missing(tok):
                raise MissingValueError(f"{path}:{lineno}: missing value in column {header[col]!r}")

    if isinstance(kinds, str):
        kinds = parse_kinds(kinds)
    if kinds is not None and len(kinds) != J:
        raise DataError(f"{path}: {len(kinds)} kinds given for {J} columns")

    values = np.empty((len(body), J))
    out_kinds, inferred = [], []
    for j in range(J):
        raw = [row[j] for row in body]
        try:
            col = np.array([float(tok) for tok in raw])
        except ValueError as exc:
            raise DataError(f"{path}: non-numeric token in column {header[j]!r}: {exc}") from None
        if kinds is None:
            kind = _infer_kind(col)
            if isinstance(kind, Categorical):
                _, col = np.unique(col, return_inverse=True)
            inferred.append(True)
        else:
            kind = kinds[j]
            inferred.append(False)
        values[:, j] = col
        out_kinds.append(kind)
    return Dataset(values, out_kinds, header, inferred)


def write_csv(dataset: Dataset, path) -> None:
    """Write a dataset so that :func:`load_csv` with the same kinds reproduces it."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.names)
        for row in dataset.values:
            writer.writerow(
                [_fmt(v, isinstance(k, Categorical)) for v, k in zip(row, dataset.kinds)]
            )


def _fmt(v: float, categorical: bool) -> str:
    if categorical:
        return str(int(v))
    return repr(float(v))


def write_labels(labels, path, name: str = "label") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([name])
        writer.writerows([[int(v)] for v in labels])


def read_labels(path) -> np.ndarray:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise DataError(f"{path}: no labels")
    try:
        return np.array([int(float(r[0])) for r in rows[1:]])
    except ValueError as exc:
        raise DataError(f"{path}: bad label: {exc}") from None


def column_sd(dataset: Dataset, j: int) -> float:
    """Sample standard deviation (divisor ``n - 1``) of a continuous column."""
    if not dataset.is_continuous(j):
        raise DataError(f"column {dataset.names[j]!r} is categorical")
    if dataset.n < 2:
        raise DataError("standard deviation needs at least two rows")
    col = dataset.column(j)
    mean = math.fsum(col) / dataset.n
    return math.sqrt(math.fsum((col - mean) ** 2) / (dataset.n - 1))
