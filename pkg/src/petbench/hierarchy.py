"""Per-attribute generalization ladders.

A hierarchy file has one row per raw value and one column per level, ";"
separated. Column 0 is the raw value and the last column must be "*" for
every row, e.g. the ZIP ladder::

    1013;101*;*
    1014;101*;*
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

SUPPRESSED = "*"


class HierarchyError(ValueError):
    pass


class DomainError(KeyError):
    pass


@dataclass(frozen=True)
class Hierarchy:
    attribute: str
    # table[value] = (level0, level1, ..., levelL)
    table: dict[str, tuple[str, ...]]

    def __post_init__(self):
        depths = {len(t) for t in self.table.values()}
        if len(depths) > 1:
            raise HierarchyError(f"{self.attribute}: rows have differing arity {sorted(depths)}")
        for value, ladder in self.table.items():
            if ladder[0] != value:
                raise HierarchyError(f"{self.attribute}: level 0 of {value!r} is {ladder[0]!r}")
            if len(ladder) > 1 and ladder[-1] != SUPPRESSED:
                raise HierarchyError(
                    f"{self.attribute}: top level of {value!r} is {ladder[-1]!r}, not '*'"
                )
        self._check_coarsening()

    def _check_coarsening(self):
        for level in range(self.levels):
            merged: dict[str, str] = {}
            for ladder in self.table.values():
                lower, upper = ladder[level], ladder[level + 1]
                seen = merged.setdefault(lower, upper)
                if seen != upper:
                    raise HierarchyError(
                        f"{self.attribute}: level {level} group {lower!r} splits into"
                        f" {seen!r} and {upper!r} at level {level + 1}"
                    )

    @property
    def levels(self) -> int:
        """Top level L; level L maps everything to "*" (0 for an identity-only ladder)."""
        if not self.table:
            return 0
        return len(next(iter(self.table.values()))) - 1

    @property
    def domain(self) -> list[str]:
        return list(self.table)

    def generalize(self, value: str, level: int) -> str:
        if not 0 <= level <= self.levels:
            raise IndexError(f"{self.attribute}: level {level} outside [0, {self.levels}]")
        try:
            return self.table[value][level]
        except KeyError:
            raise DomainError(f"{self.attribute}: {value!r} not in hierarchy domain") from None

    def level_map(self, level: int) -> dict[str, str]:
        return {v: ladder[level] for v, ladder in self.table.items()}

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, delimiter=";", lineterminator="\n")
            writer.writerows(self.table.values())


def generalize(value: str, h: Hierarchy, level: int) -> str:
    return h.generalize(value, level)


def load_hierarchy(path: str | Path, attribute: str | None = None) -> Hierarchy:
    path = Path(path)
    table: dict[str, tuple[str, ...]] = {}
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter=";"), start=1):
            if not row:
                continue
            ladder = tuple(cell.strip() for cell in row)
            previous = table.get(ladder[0])
            if previous is not None and previous != ladder:
                raise HierarchyError(
                    f"{path}:{lineno}: {ladder[0]!r} has conflicting generalizations"
                )
            table[ladder[0]] = ladder
    return Hierarchy(attribute or path.stem, table)


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def synthesize_interval_hierarchy(
    values: Iterable[float | str],
    widths: Sequence[float] = (),
    attribute: str = "value",
) -> Hierarchy:
    """Zero-aligned half-open interval ladder: level l bins by ``widths[l-1]``, top is "*".

    Level l groups whole level l-1 bins by the width-l bin holding their lower
    bound, so the ladder coarsens even when a width does not divide the next.
    A group's label then stretches to cover its widest member bin.
    """
    widths = list(widths)
    if any(w <= 0 for w in widths):
        raise HierarchyError("interval widths must be positive")
    if any(b <= a for a, b in zip(widths, widths[1:])):
        raise HierarchyError(f"widths must be strictly increasing, got {widths}")
    keys = [raw if isinstance(raw, str) else _fmt(raw) for raw in values]
    bounds = {key: (float(key), float(key)) for key in keys}  # current bin per value
    ladders = {key: [key] for key in keys}
    for w in widths:
        group = {key: math.floor(lo / w) * w for key, (lo, _) in bounds.items()}
        upper: dict[float, float] = {}
        for key, g in group.items():
            upper[g] = max(upper.get(g, g + w), bounds[key][1])
        for key, g in group.items():
            bounds[key] = (g, upper[g])
            ladders[key].append(f"[{_fmt(g)},{_fmt(upper[g])})")
    return Hierarchy(attribute, {key: (*ladder, SUPPRESSED) for key, ladder in ladders.items()})


def digit_suppression_hierarchy(values: Iterable[str], attribute: str = "zip") -> Hierarchy:
    """Suppress trailing characters one at a time: 1013 -> 101* -> 10** -> 1*** -> *."""
    values = list(dict.fromkeys(values))
    width = max((len(v) for v in values), default=0)
    table = {}
    for v in values:
        ladder = [v]
        for drop in range(1, width):
            keep = max(len(v) - drop, 0)
            ladder.append(v[:keep] + "*" * (len(v) - keep))
        ladder.append(SUPPRESSED)
        table[v] = tuple(ladder)
    return Hierarchy(attribute, table)
