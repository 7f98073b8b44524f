"""k-anonymity by global generalization plus record suppression.

The search walks the generalization lattice in order of increasing normalized
height (sum of level / ladder depth). Satisfiability is monotone under
coarsening, so the first height band holding a satisfiable node contains the
optimum and every node above it can be skipped.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import SUPPRESSED, Dataset
from .hierarchy import Hierarchy


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class AnonymizationConfig:
    k: int
    quasi_identifiers: tuple[str, ...]
    hierarchies: dict[str, Hierarchy]
    suppression_limit: float = 0.20
    max_nodes: int = 5_000_000

    def __post_init__(self):
        object.__setattr__(self, "quasi_identifiers", tuple(self.quasi_identifiers))
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0 <= self.suppression_limit <= 1:
            raise ValueError(f"suppression_limit must lie in [0, 1], got {self.suppression_limit}")
        missing = [q for q in self.quasi_identifiers if q not in self.hierarchies]
        if missing:
            raise ValueError(f"no hierarchy for quasi-identifiers {missing}")

    @property
    def depths(self) -> tuple[int, ...]:
        return tuple(self.hierarchies[q].levels for q in self.quasi_identifiers)


LatticeNode = tuple  # one level per quasi-identifier, in config order


@dataclass
class AnonymizationSolution:
    node: tuple[int, ...]
    suppressed_rows: frozenset[int]
    output: Dataset
    suppressed_cell_fraction: float
    quasi_identifiers: tuple[str, ...] = ()
    k: int = 1
    nodes_evaluated: int = 0
    stats: dict = field(default_factory=dict)

    def sidecar(self) -> dict:
        return {
            "k": self.k,
            "quasi_identifiers": list(self.quasi_identifiers),
            "node": dict(zip(self.quasi_identifiers, self.node)),
            "suppressed_records": len(self.suppressed_rows),
            "n": self.output.n,
            "suppressed_cell_fraction": self.suppressed_cell_fraction,
            "nodes_evaluated": self.nodes_evaluated,
        }

    def write(self, csv_path: str | Path, sidecar_path: str | Path | None = None) -> None:
        csv_path = Path(csv_path)
        self.output.to_csv(csv_path)
        sidecar_path = Path(sidecar_path) if sidecar_path else csv_path.with_suffix(".json")
        sidecar_path.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")


class _Codes:
    """Integer codes of each quasi-identifier column at every ladder level."""

    def __init__(self, d: Dataset, config: AnonymizationConfig):
        self.levels: list[list[np.ndarray]] = []
        self.cards: list[list[int]] = []
        for q in config.quasi_identifiers:
            h = config.hierarchies[q]
            column = d.column(q)
            per_level, cards = [], []
            for level in range(h.levels + 1):
                mapping = h.level_map(level)
                vocab: dict[str, int] = {}
                try:
                    codes = np.fromiter(
                        (vocab.setdefault(mapping[v], len(vocab)) for v in column),
                        dtype=np.int64, count=len(column),
                    )
                except KeyError as exc:
                    raise ValueError(f"{q}: value {exc.args[0]!r} missing from hierarchy") from None
                per_level.append(codes)
                cards.append(max(len(vocab), 1))
            self.levels.append(per_level)
            self.cards.append(cards)

    def keys(self, node: Sequence[int]) -> np.ndarray:
        n = len(self.levels[0][0]) if self.levels else 0
        key = np.zeros(n, dtype=np.int64)
        radix = 1
        for q, level in enumerate(node):
            card = self.cards[q][level]
            if radix * card >= 2**62:
                # compress to dense ranks before the radix overflows
                _, key = np.unique(key, return_inverse=True)
                radix = int(key.max()) + 1 if n else 1
            key = key + self.levels[q][level] * radix
            radix *= card
        return key

    def class_sizes(self, node: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """Per-row class id and the size of each class."""
        _, inverse, counts = np.unique(self.keys(node), return_inverse=True, return_counts=True)
        return inverse, counts


def _check_node(config: AnonymizationConfig, node: Sequence[int]) -> tuple[int, ...]:
    node = tuple(int(x) for x in node)
    if len(node) != len(config.quasi_identifiers):
        raise ValueError(f"node {node} has wrong length for {config.quasi_identifiers}")
    for level, depth in zip(node, config.depths):
        if not 0 <= level <= depth:
            raise ValueError(f"node {node} outside lattice bounds {config.depths}")
    return node


def _generalized_tuple(d: Dataset, config: AnonymizationConfig, node, i: int) -> tuple[str, ...]:
    row = d.rows[i]
    return tuple(
        config.hierarchies[q].generalize(row[d.index(q)], level)
        for q, level in zip(config.quasi_identifiers, node)
    )


def equivalence_classes(
    d: Dataset, config: AnonymizationConfig, node: Sequence[int]
) -> list[tuple[tuple[str, ...], frozenset[int]]]:
    """Partition row indices by their generalized quasi-identifier tuple."""
    node = _check_node(config, node)
    groups: dict[tuple[str, ...], list[int]] = {}
    for i in range(d.n):
        groups.setdefault(_generalized_tuple(d, config, node, i), []).append(i)
    return [(key, frozenset(rows)) for key, rows in groups.items()]


def is_k_anonymous(
    d: Dataset, config: AnonymizationConfig, node: Sequence[int]
) -> tuple[bool, int]:
    """Whether ``node`` reaches k-anonymity within the suppression budget, and the rows it must drop."""
    node = _check_node(config, node)
    if d.n == 0:
        return True, 0
    _, counts = _Codes(d, config).class_sizes(node)
    need = int(counts[counts < config.k].sum())
    return need <= config.suppression_limit * d.n, need


def node_cost(config: AnonymizationConfig, node: Sequence[int], suppressed: int) -> tuple:
    height = sum(
        (Fraction(level, depth) for level, depth in zip(node, config.depths) if depth),
        Fraction(0),
    )
    return (height, suppressed, tuple(node))


def lattice(config: AnonymizationConfig):
    return itertools.product(*(range(depth + 1) for depth in config.depths))


def _apply(d: Dataset, config: AnonymizationConfig, node, suppressed: frozenset[int]) -> Dataset:
    qi_cols = {d.index(q): config.hierarchies[q].level_map(level)
               for q, level in zip(config.quasi_identifiers, node)}
    drop_cols = {j for j, a in enumerate(d.schema) if a.privacy_class == "identifying"}
    rows = []
    for i, row in enumerate(d.rows):
        out = list(row)
        for j in drop_cols:
            out[j] = SUPPRESSED
        for j, mapping in qi_cols.items():
            out[j] = SUPPRESSED if i in suppressed else mapping[row[j]]
        rows.append(tuple(out))
    return d.with_rows(rows)


def generalize_dataset(d: Dataset, config: AnonymizationConfig, node: Sequence[int]) -> Dataset:
    """Recode ``d`` through ``node`` without suppressing any record."""
    return _apply(d, config, _check_node(config, node), frozenset())


def count_suppressed_cells(output: Dataset) -> int:
    return sum(v == SUPPRESSED for row in output.rows for v in row)


def suppressed_cell_fraction(s: AnonymizationSolution | Dataset, d: Dataset | None = None) -> float:
    """Share of "*" cells in the anonymized output over n x attribute count."""
    output = s.output if isinstance(s, AnonymizationSolution) else s
    cells = output.n * len(output.schema)
    return count_suppressed_cells(output) / cells if cells else 0.0


def _band_key(node, depths, lcm) -> int:
    return sum(level * (lcm // depth) for level, depth in zip(node, depths) if depth)


def anonymize(d: Dataset, config: AnonymizationConfig) -> AnonymizationSolution:
    if d.n < config.k:
        raise InfeasibleError(f"n={d.n} is smaller than k={config.k}")
    for q in config.quasi_identifiers:
        if d.attribute(q).privacy_class != "quasi_identifying":
            raise ValueError(f"{q} is listed as quasi-identifier but classified "
                             f"{d.attribute(q).privacy_class!r}")

    depths = config.depths
    total = math.prod(depth + 1 for depth in depths)
    if total > config.max_nodes:
        raise ValueError(f"lattice has {total} nodes, above max_nodes={config.max_nodes}")
    lcm = math.lcm(*[x for x in depths if x]) if any(depths) else 1

    bands: dict[int, list[tuple[int, ...]]] = {}
    for node in lattice(config):
        bands.setdefault(_band_key(node, depths, lcm), []).append(node)

    codes = _Codes(d, config)
    budget = config.suppression_limit * d.n
    evaluated = 0
    best = None
    for band in sorted(bands):
        for node in bands[band]:
            evaluated += 1
            _, counts = codes.class_sizes(node)
            need = int(counts[counts < config.k].sum())
            if need > budget:
                continue
            cost = (band, need, node)
            if best is None or cost < best:
                best = cost
        if best is not None:
            break
    if best is None:
        raise InfeasibleError("no lattice node satisfies k-anonymity within the suppression limit")

    _, need, node = best
    inverse, counts = codes.class_sizes(node)
    small = np.flatnonzero(counts < config.k)
    suppressed = frozenset(np.flatnonzero(np.isin(inverse, small)).tolist())
    assert len(suppressed) == need
    output = _apply(d, config, node, suppressed)
    return AnonymizationSolution(
        node=node,
        suppressed_rows=suppressed,
        output=output,
        suppressed_cell_fraction=suppressed_cell_fraction(output),
        quasi_identifiers=config.quasi_identifiers,
        k=config.k,
        nodes_evaluated=evaluated,
    )
