"""Finite refinable cell partitions standing in for non-atomic measure spaces.

A space is a finite ordered list of cells. Non-atomicity is modeled
operationally: a splittable cell can be divided at any interior fraction,
which is the only property the selection algorithms need. Spaces are
immutable; mutating operations return new spaces.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import AtomNotSplittable, FractionOutOfRange, UnknownCell

TOTAL_MEASURE_RTOL = 1e-12


@dataclass(frozen=True)
class Cell:
    id: str
    measure: float
    splittable: bool = True

    def __post_init__(self):
        if not (self.measure > 0 and math.isfinite(self.measure)):
            raise ValueError(f"cell {self.id!r}: measure must be positive and finite")


@dataclass(frozen=True)
class MeasureSpace:
    cells: tuple[Cell, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {c.id: i for i, c in enumerate(self.cells)}
        if len(index) != len(self.cells):
            raise ValueError("duplicate cell ids")
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_measures(cls, measures, prefix: str = "c", splittable: bool = True) -> "MeasureSpace":
        return cls(tuple(Cell(f"{prefix}{i}", float(m), splittable) for i, m in enumerate(measures)))

    @classmethod
    def uniform(cls, n_cells: int, total: float = 1.0) -> "MeasureSpace":
        return cls.from_measures([total / n_cells] * n_cells)

    @property
    def total_measure(self) -> float:
        return math.fsum(c.measure for c in self.cells)

    @property
    def is_nonatomic(self) -> bool:
        return all(c.splittable for c in self.cells)

    def cell(self, cell_id: str) -> Cell:
        try:
            return self.cells[self._index[cell_id]]
        except KeyError:
            raise UnknownCell(f"no cell with id {cell_id!r}") from None

    def __contains__(self, cell_id: str) -> bool:
        return cell_id in self._index

    def to_json(self) -> str:
        return json.dumps(
            [{"id": c.id, "measure": c.measure, "splittable": c.splittable} for c in self.cells]
        )

    @classmethod
    def from_json(cls, text: str) -> "MeasureSpace":
        return cls(tuple(Cell(e["id"], e["measure"], e.get("splittable", True)) for e in json.loads(text)))


@dataclass(frozen=True)
class IntervalLayout:
    """Prefix-sum realization of a space on [0, total_measure)."""

    entries: tuple[tuple[str, float, float], ...]  # (cell id, start, end)

    @property
    def total_length(self) -> float:
        return self.entries[-1][2] if self.entries else 0.0

    def interval(self, cell_id: str) -> tuple[float, float]:
        for cid, a, b in self.entries:
            if cid == cell_id:
                return a, b
        raise UnknownCell(f"no cell with id {cell_id!r}")

    def to_json(self) -> str:
        return json.dumps([{"id": cid, "start": a, "end": b} for cid, a, b in self.entries])


def split_cell(space: MeasureSpace, cell_id: str, fraction: float) -> tuple[MeasureSpace, str, str]:
    """Replace a cell by two children with measures fraction*mu and (1-fraction)*mu."""
    cell = space.cell(cell_id)
    if not cell.splittable:
        raise AtomNotSplittable(f"cell {cell_id!r} is an atom")
    if not (0.0 < fraction < 1.0):
        raise FractionOutOfRange(f"fraction must lie in (0,1), got {fraction}")
    left = Cell(cell_id + "0", cell.measure * fraction, True)
    right = Cell(cell_id + "1", cell.measure * (1.0 - fraction), True)
    i = space._index[cell_id]
    new_cells = space.cells[:i] + (left, right) + space.cells[i + 1:]
    return MeasureSpace(new_cells), left.id, right.id


def canonicalize_to_interval(space: MeasureSpace) -> IntervalLayout:
    """Deterministic prefix-sum layout of the cells on [0, total_measure)."""
    entries = []
    pos = 0.0
    for c in space.cells:
        entries.append((c.id, pos, pos + c.measure))
        pos += c.measure
    return IntervalLayout(tuple(entries))


def refine_uniform(space: MeasureSpace, max_cell_measure: float) -> MeasureSpace:
    """Split cells until every measure is <= max_cell_measure."""
    if max_cell_measure <= 0:
        raise FractionOutOfRange("max_cell_measure must be positive")
    new_cells: list[Cell] = []
    for c in space.cells:
        if c.measure <= max_cell_measure:
            new_cells.append(c)
            continue
        if not c.splittable:
            raise AtomNotSplittable(f"cell {c.id!r} is an atom with measure > bound")
        k = math.ceil(c.measure / max_cell_measure)
        piece = c.measure / k
        # successive binary splits into k equal pieces, ids nest left-to-right
        cur = c
        for _ in range(k - 1):
            new_cells.append(Cell(cur.id + "0", piece, True))
            cur = Cell(cur.id + "1", cur.measure - piece, True)
        new_cells.append(cur)
    return MeasureSpace(tuple(new_cells))
