"""Tile grids, layouts, and the symbolic layout text format.

Coordinates are (x, y) with (0, 0) at the top-left corner; x grows to the
right and y grows downward, so moving down adds 1 to y.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

Cell = tuple[int, int]


class Tile(enum.Enum):
    FLOOR = " "
    COUNTER = "X"
    ONION_DISPENSER = "O"
    TOMATO_DISPENSER = "T"
    DISH_DISPENSER = "D"
    POT = "P"
    SERVING = "S"


class Facing(enum.Enum):
    UP = (0, -1)
    DOWN = (0, 1)
    LEFT = (-1, 0)
    RIGHT = (1, 0)

    @property
    def delta(self) -> Cell:
        return self.value


def shift(cell: Cell, facing: Facing) -> Cell:
    dx, dy = facing.delta
    return (cell[0] + dx, cell[1] + dy)


@dataclass(frozen=True)
class Pose:
    cell: Cell
    facing: Facing

    @property
    def faced_cell(self) -> Cell:
        return shift(self.cell, self.facing)


class LayoutError(ValueError):
    """A layout file violates a structural constraint."""


class NonRectangular(LayoutError):
    def __init__(self, row: int):
        super().__init__(f"row {row} has a different length than row 0")
        self.row = row


class UnknownCharacter(LayoutError):
    def __init__(self, char: str, pos: Cell):
        super().__init__(f"unknown character {char!r} at {pos}")
        self.char = char
        self.pos = pos


class MissingStart(LayoutError):
    def __init__(self, which: str):
        super().__init__(f"start marker {which!r} not found")
        self.which = which


class DuplicateStart(LayoutError):
    def __init__(self, which: str, pos: Cell):
        super().__init__(f"start marker {which!r} appears more than once (second at {pos})")
        self.which = which
        self.pos = pos


class OpenBoundary(LayoutError):
    def __init__(self, pos: Cell):
        super().__init__(f"boundary cell {pos} is walkable; the kitchen must be closed")
        self.pos = pos


class MissingFacility(LayoutError):
    def __init__(self, kind: str):
        super().__init__(f"layout has no {kind} tile")
        self.kind = kind


@dataclass(frozen=True)
class Layout:
    """Immutable kitchen floor plan plus the two agent start poses."""

    name: str
    width: int
    height: int
    grid: tuple[tuple[Tile, ...], ...]  # grid[y][x]
    starts: tuple[Pose, Pose]

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def tile(self, cell: Cell) -> Tile:
        x, y = cell
        return self.grid[y][x]

    def is_floor(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and self.tile(cell) is Tile.FLOOR

    def floor_cells(self) -> tuple[Cell, ...]:
        return tuple(
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.grid[y][x] is Tile.FLOOR
        )

    def cells_of(self, kind: Tile) -> tuple[Cell, ...]:
        return tuple(
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.grid[y][x] is kind
        )

    def floor_neighbors(self, cell: Cell) -> tuple[Cell, ...]:
        return tuple(c for f in Facing if self.is_floor(c := shift(cell, f)))

    def adjacent_floor(self, cell: Cell) -> tuple[Cell, ...]:
        """Floor cells from which an agent can face `cell` (4-adjacency)."""
        return self.floor_neighbors(cell)

    def render(self) -> str:
        """Inverse of parse_layout, with start markers reinserted."""
        rows = [[t.value for t in row] for row in self.grid]
        for mark, pose in zip("12", self.starts):
            x, y = pose.cell
            rows[y][x] = mark
        return "\n".join("".join(r) for r in rows)


def parse_layout(text: str, name: str = "layout") -> Layout:
    """Parse the symbolic layout text format into a validated Layout.

    The alphabet is X (counter/wall), O/T/D (onion, tomato, dish
    dispensers), P (pot), S (serving window), space (floor), and 1/2
    (agent starts, on floor, default facing down). Raises a subclass of
    LayoutError naming the first violated constraint.
    """
    lines = text.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise NonRectangular(0)
    width = len(lines[0])
    for y, line in enumerate(lines):
        if len(line) != width:
            raise NonRectangular(y)
    height = len(lines)

    grid: list[list[Tile]] = []
    starts: dict[str, Cell] = {}
    by_char = {t.value: t for t in Tile}
    for y, line in enumerate(lines):
        row: list[Tile] = []
        for x, ch in enumerate(line):
            if ch in "12":
                if ch in starts:
                    raise DuplicateStart(ch, (x, y))
                starts[ch] = (x, y)
                row.append(Tile.FLOOR)
            elif ch in by_char:
                row.append(by_char[ch])
            else:
                raise UnknownCharacter(ch, (x, y))
        grid.append(row)

    for mark in "12":
        if mark not in starts:
            raise MissingStart(mark)
    if starts["1"] == starts["2"]:
        raise DuplicateStart("2", starts["2"])

    for y in range(height):
        for x in range(width):
            on_edge = x == 0 or y == 0 or x == width - 1 or y == height - 1
            if on_edge and grid[y][x] is Tile.FLOOR:
                raise OpenBoundary((x, y))

    def present(kind: Tile) -> bool:
        return any(t is kind for row in grid for t in row)

    if not present(Tile.POT):
        raise MissingFacility("Pot")
    if not present(Tile.DISH_DISPENSER):
        raise MissingFacility("Dish")
    if not present(Tile.SERVING):
        raise MissingFacility("Serving")
    if not (present(Tile.ONION_DISPENSER) or present(Tile.TOMATO_DISPENSER)):
        raise MissingFacility("IngredientDispenser")

    return Layout(
        name=name,
        width=width,
        height=height,
        grid=tuple(tuple(row) for row in grid),
        starts=(
            Pose(starts["1"], Facing.DOWN),
            Pose(starts["2"], Facing.DOWN),
        ),
    )


def load_layout_file(path) -> Layout:
    from pathlib import Path

    p = Path(path)
    return parse_layout(p.read_text(encoding="utf-8"), name=p.stem)
