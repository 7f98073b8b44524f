"""Tabular record model, CSV loading, cleaning, splitting and feature encoding."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

KINDS = ("categorical", "integer", "continuous")
PRIVACY_CLASSES = ("insensitive", "sensitive", "identifying", "quasi_identifying")
SUPPRESSED = "*"


class SchemaError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class StratificationError(ValueError):
    pass


@dataclass(frozen=True)
class AttributeSchema:
    name: str
    kind: str = "categorical"
    privacy_class: str = "insensitive"
    missing_token: str = "?"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"{self.name}: unknown kind {self.kind!r}")
        if self.privacy_class not in PRIVACY_CLASSES:
            raise SchemaError(f"{self.name}: unknown privacy class {self.privacy_class!r}")

    @property
    def numeric(self) -> bool:
        return self.kind in ("integer", "continuous")

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeSchema":
        return cls(
            name=d["name"],
            kind=d.get("kind", "categorical"),
            privacy_class=d.get("privacy_class", "insensitive"),
            missing_token=str(d.get("missing_token", "?")),
        )


def _is_number(text: str) -> bool:
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


@dataclass(frozen=True)
class Dataset:
    """Immutable table: one string value per schema attribute per row."""

    schema: tuple[AttributeSchema, ...]
    rows: tuple[tuple[str, ...], ...]
    target: str
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        names = [a.name for a in self.schema]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate attribute names in schema: {names}")
        if self.target not in names:
            raise SchemaError(f"target {self.target!r} not in schema")
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(names)})
        width = len(names)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ParseError(f"row {i} has {len(row)} values, expected {width}")

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.schema]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SchemaError(f"unknown attribute {name!r}") from None

    def attribute(self, name: str) -> AttributeSchema:
        return self.schema[self.index(name)]

    def column(self, name: str) -> list[str]:
        j = self.index(name)
        return [row[j] for row in self.rows]

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return self.with_rows([self.rows[i] for i in indices])

    def with_rows(self, rows: Sequence[Sequence[str]]) -> "Dataset":
        return Dataset(self.schema, tuple(tuple(r) for r in rows), self.target)

    def to_csv(self, path: str | Path, delimiter: str = ",") -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            writer.writerow(self.names)
            writer.writerows(self.rows)


def load_csv(
    path: str | Path,
    schema: Sequence[AttributeSchema],
    target: str,
    delimiter: str = ",",
) -> Dataset:
    """Read a headered CSV whose columns match ``schema`` in any order.

    Rows are reordered into schema order; values are kept as raw strings.
    """
    by_name = {a.name: a for a in schema}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter, skipinitialspace=True)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("missing header", line=1) from None
        unknown = [h for h in header if h not in by_name]
        if unknown:
            raise SchemaError(f"unknown columns {unknown}")
        missing = [a.name for a in schema if a.name not in header]
        if missing:
            raise SchemaError(f"columns missing from file: {missing}")
        if len(set(header)) != len(header):
            raise SchemaError(f"duplicate columns in header: {header}")
        order = [header.index(a.name) for a in schema]
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} values, got {len(row)}", line=reader.line_num
                )
            rows.append(tuple(row[j].strip() for j in order))
    d = Dataset(tuple(schema), tuple(rows), target)
    for a in d.schema:
        if not a.numeric:
            continue
        j = d.index(a.name)
        for i, row in enumerate(d.rows):
            if row[j] != a.missing_token and not _is_number(row[j]):
                raise ParseError(f"{a.name}: non-numeric value {row[j]!r}", line=i + 2)
    return d


def drop_columns(d: Dataset, names: Sequence[str]) -> Dataset:
    if d.target in names:
        raise SchemaError(f"cannot drop the target {d.target!r}")
    keep = [j for j, a in enumerate(d.schema) if a.name not in set(names)]
    for name in names:
        d.index(name)
    return Dataset(tuple(d.schema[j] for j in keep),
                   tuple(tuple(row[j] for j in keep) for row in d.rows), d.target)


def clean(d: Dataset) -> Dataset:
    """Drop every row holding a missing token in any attribute."""
    tokens = [a.missing_token for a in d.schema]
    kept = [row for row in d.rows if all(v != t for v, t in zip(row, tokens))]
    if len(kept) == d.n:
        return d
    return d.with_rows(kept)


def binarize_target(
    d: Dataset, threshold: float, positive: str = "pass", negative: str = "fail"
) -> Dataset:
    """Replace a numeric target by ``positive`` when value >= threshold, else ``negative``."""
    j = d.index(d.target)
    attr = d.schema[j]
    if not attr.numeric:
        raise TypeError(f"target {attr.name!r} is {attr.kind}, not numeric")
    rows = []
    for row in d.rows:
        try:
            value = float(row[j])
        except ValueError:
            raise TypeError(f"target value {row[j]!r} is not numeric") from None
        label = positive if value >= threshold else negative
        rows.append(row[:j] + (label,) + row[j + 1:])
    schema = list(d.schema)
    schema[j] = replace(attr, kind="categorical")
    return Dataset(tuple(schema), tuple(rows), d.target)


def split(d: Dataset, test_fraction: float = 0.2, seed: int = 42) -> tuple[Dataset, Dataset]:
    """Stratified, seeded train/test partition with |test| = round(test_fraction * n).

    Per-class test counts are allocated by largest remainder so the total is exact.
    """
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    labels = d.column(d.target)
    classes = sorted(set(labels))
    members = {c: [i for i, y in enumerate(labels) if y == c] for c in classes}
    n_test = math.floor(test_fraction * d.n + 0.5)

    quotas = {c: test_fraction * len(members[c]) for c in classes}
    alloc = {c: math.floor(q) for c, q in quotas.items()}
    leftover = n_test - sum(alloc.values())
    by_remainder = sorted(classes, key=lambda c: (-(quotas[c] - alloc[c]), c))
    for c in by_remainder[:max(leftover, 0)]:
        alloc[c] += 1
    for c in classes:
        if alloc[c] > len(members[c]):
            raise StratificationError(
                f"class {c!r} has {len(members[c])} rows, {alloc[c]} needed in test"
            )

    rng = np.random.default_rng(seed)
    test_idx: list[int] = []
    for c in classes:
        picked = rng.permutation(len(members[c]))[: alloc[c]]
        test_idx.extend(members[c][p] for p in picked)
    test_set = set(test_idx)
    train_idx = [i for i in range(d.n) if i not in test_set]
    return d.subset(train_idx), d.subset(sorted(test_idx))


@dataclass
class _Block:
    name: str
    numeric: bool
    categories: list[str] = field(default_factory=list)
    lo: float = 0.0
    hi: float = 0.0
    has_star: bool = False

    @property
    def width(self) -> int:
        if self.numeric:
            return 1 + int(self.has_star)
        return len(self.categories)


class Encoder:
    """One-hot for categorical attributes, train-fitted min-max for numeric ones.

    A numeric attribute is encoded as a number only when every non-"*" training
    value parses; "*" cells then become 0 plus a suppression indicator column.
    Otherwise (e.g. an age column generalized to intervals) it is one-hot encoded.
    Categories unseen during ``fit`` encode as an all-zero block.
    """

    def __init__(self):
        self.blocks: list[_Block] = []
        self.labels: list[str] = []
        self.target: str | None = None

    def fit(self, d: Dataset, labels: Sequence[str] | None = None) -> "Encoder":
        self.target = d.target
        self.blocks = []
        for a in d.schema:
            if a.name == d.target:
                continue
            values = d.column(a.name)
            present = [v for v in values if v != SUPPRESSED]
            if a.numeric and all(_is_number(v) for v in present):
                nums = [float(v) for v in present]
                self.blocks.append(_Block(
                    a.name, True,
                    lo=min(nums) if nums else 0.0,
                    hi=max(nums) if nums else 0.0,
                    has_star=len(present) < len(values),
                ))
            else:
                self.blocks.append(_Block(a.name, False, categories=sorted(set(values))))
        self.labels = sorted(labels) if labels is not None else sorted(set(d.column(d.target)))
        if len(self.labels) != 2:
            raise ValueError(f"binary target required, got classes {self.labels}")
        return self

    @property
    def n_features(self) -> int:
        return sum(b.width for b in self.blocks)

    def feature_names(self) -> list[str]:
        out = []
        for b in self.blocks:
            if b.numeric:
                out.append(b.name)
                if b.has_star:
                    out.append(f"{b.name}={SUPPRESSED}")
            else:
                out.extend(f"{b.name}={c}" for c in b.categories)
        return out

    def transform(self, d: Dataset) -> tuple[np.ndarray, np.ndarray]:
        X = np.zeros((d.n, self.n_features))
        col = 0
        for b in self.blocks:
            values = d.column(b.name)
            if b.numeric:
                span = b.hi - b.lo
                for i, v in enumerate(values):
                    if v == SUPPRESSED:
                        if b.has_star:
                            X[i, col + 1] = 1.0
                        continue
                    X[i, col] = (float(v) - b.lo) / span if span > 0 else 0.0
            else:
                lookup = {c: k for k, c in enumerate(b.categories)}
                for i, v in enumerate(values):
                    k = lookup.get(v)
                    if k is not None:
                        X[i, col + k] = 1.0
            col += b.width
        return X, self.encode_labels(d.column(d.target))

    def encode_labels(self, values: Sequence[str]) -> np.ndarray:
        lookup = {c: k for k, c in enumerate(self.labels)}
        try:
            return np.array([lookup[v] for v in values], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"unknown label {exc.args[0]!r}") from None

    def decode_categories(self, name: str, indices: Sequence[int]) -> list[str]:
        block = next(b for b in self.blocks if b.name == name)
        return [block.categories[i] for i in indices]


def encode(train: Dataset, *others: Dataset) -> list[tuple[np.ndarray, np.ndarray]]:
    """Fit an Encoder on ``train`` and return (X, y) for it and each further dataset."""
    enc = Encoder().fit(train)
    return [enc.transform(d) for d in (train, *others)]
