"""Tiling systems, their encoding as a database plus a fixed piece-wise
linear (but not warded) rule set, and a bounded brute-force tiler.

A tiling of width n and depth m is a grid ``f(col, row)`` with
``f(1, 1) = start``, ``f(1, m) = finish``, left column in ``left``, right
column in ``right``, ``(f(j, i), f(j+1, i)) in horiz`` and
``(f(j, i), f(j, i+1)) in vert``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .chase import bounded_chase
from .core import CQ, Constant, Instance, Program, evaluate_cq, fact
from .textio import parse_program, parse_query

TILING_RULES = """\
Tile(x) -> exists z: Row(z,z,x,x).
Row(_,x,y,z), H(z,w) -> exists u: Row(x,u,y,w).
Row(x,x,y,y), Row(x2,x2,y2,y2), V(y,y2) -> Comp(x,x2).
Row(x,y,_,z), Row(x2,y2,_,z2), Comp(x,x2), V(z,z2) -> Comp(y,y2).
Row(_,x,y,z), Start(y), Right(z) -> CTiling(x,y).
CTiling(x,_), Row(_,y,z,w), Comp(x,y), Left(z), Right(w) -> CTiling(y,z).
"""

TILING_QUERY = "Q :- CTiling(x,y), Finish(y)."


class TilingError(ValueError):
    pass


@dataclass(frozen=True)
class TilingSystem:
    tiles: frozenset
    left: frozenset
    right: frozenset
    horiz: frozenset
    vert: frozenset
    start: str
    finish: str

    def __post_init__(self):
        for name in ("tiles", "left", "right"):
            object.__setattr__(self, name, frozenset(str(t) for t in getattr(self, name)))
        for name in ("horiz", "vert"):
            pairs = set()
            for p in getattr(self, name):
                if len(p) != 2:
                    raise TilingError(f"{name} entry {p!r} is not a pair")
                pairs.add((str(p[0]), str(p[1])))
            object.__setattr__(self, name, frozenset(pairs))
        object.__setattr__(self, "start", str(self.start))
        object.__setattr__(self, "finish", str(self.finish))
        if self.left & self.right:
            raise TilingError(f"left and right border tiles overlap: {sorted(self.left & self.right)}")
        if not (self.left | self.right) <= self.tiles:
            raise TilingError("border tiles must be tiles")
        for s, t in self.horiz | self.vert:
            if s not in self.tiles or t not in self.tiles:
                raise TilingError(f"constraint ({s}, {t}) mentions an unknown tile")
        if self.start not in self.tiles or self.finish not in self.tiles:
            raise TilingError("start and finish must be tiles")

    @classmethod
    def from_dict(cls, d: dict) -> "TilingSystem":
        keys = {"tiles", "left", "right", "horiz", "vert", "start", "finish"}
        unknown = set(d) - keys
        if unknown:
            raise TilingError(f"unknown keys in tiling system: {sorted(unknown)}")
        missing = keys - set(d)
        if missing:
            raise TilingError(f"missing keys in tiling system: {sorted(missing)}")
        return cls(**{k: d[k] for k in keys})

    @classmethod
    def from_json(cls, text: str) -> "TilingSystem":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "tiles": sorted(self.tiles),
            "left": sorted(self.left),
            "right": sorted(self.right),
            "horiz": sorted(list(p) for p in self.horiz),
            "vert": sorted(list(p) for p in self.vert),
            "start": self.start,
            "finish": self.finish,
        }


def tiling_database(t: TilingSystem) -> Instance:
    c = Constant
    atoms = [fact("Tile", c(x)) for x in sorted(t.tiles)]
    atoms += [fact("Left", c(x)) for x in sorted(t.left)]
    atoms += [fact("Right", c(x)) for x in sorted(t.right)]
    atoms += [fact("H", c(x), c(y)) for x, y in sorted(t.horiz)]
    atoms += [fact("V", c(x), c(y)) for x, y in sorted(t.vert)]
    atoms += [fact("Start", c(t.start)), fact("Finish", c(t.finish))]
    return Instance(atoms)


def tiling_program() -> Program:
    return parse_program(TILING_RULES)


def tiling_query() -> CQ:
    return parse_query(TILING_QUERY)


def encode_tiling(t: TilingSystem) -> tuple[Instance, Program, CQ]:
    """The database storing ``t``; the rules and the query do not depend on ``t``."""
    return tiling_database(t), tiling_program(), tiling_query()


@dataclass(frozen=True)
class Tiling:
    rows: tuple  # rows[i][j] is f(j+1, i+1)

    @property
    def width(self) -> int:
        return len(self.rows[0])

    @property
    def depth(self) -> int:
        return len(self.rows)

    def f(self, col: int, row: int) -> str:
        return self.rows[row - 1][col - 1]

    def __str__(self):
        return "\n".join(" ".join(r) for r in self.rows)


def is_tiling(t: TilingSystem, grid: Tiling) -> bool:
    n, m = grid.width, grid.depth
    if any(len(r) != n for r in grid.rows):
        return False
    f = grid.f
    if f(1, 1) != t.start or f(1, m) != t.finish:
        return False
    for i in range(1, m + 1):
        if f(1, i) not in t.left or f(n, i) not in t.right:
            return False
        for j in range(1, n):
            if (f(j, i), f(j + 1, i)) not in t.horiz:
                return False
    for i in range(1, m):
        for j in range(1, n + 1):
            if (f(j, i), f(j, i + 1)) not in t.vert:
                return False
    return True


def _rows(t: TilingSystem, n: int) -> list:
    """All rows of width n that respect the borders and the horizontal constraints."""
    succ: dict = {}
    for s, u in sorted(t.horiz):
        succ.setdefault(s, []).append(u)
    out = []

    def extend(row):
        if len(row) == n:
            if row[-1] in t.right:
                out.append(tuple(row))
            return
        for u in succ.get(row[-1], ()):
            extend(row + [u])

    for s in sorted(t.left):
        extend([s])
    return out


def brute_force_tiling(t: TilingSystem, max_n: int, max_m: int) -> Tiling | None:
    """Smallest-area tiling with width ≤ max_n and depth ≤ max_m, if any."""
    if max_n < 1 or max_m < 1:
        raise TilingError("tiling bounds must be at least 1")
    sizes = sorted(itertools.product(range(1, max_n + 1), range(1, max_m + 1)),
                   key=lambda nm: (nm[0] * nm[1], nm[0], nm[1]))
    rows_by_width: dict = {}
    for n, m in sizes:
        rows = rows_by_width.setdefault(n, _rows(t, n))
        found = _stack(t, rows, m)
        if found is not None:
            grid = Tiling(found)
            assert is_tiling(t, grid)
            return grid
    return None


def _stack(t: TilingSystem, rows: list, m: int):
    """Breadth-first over row sequences of length m, first row starting with
    start and last with finish."""
    def below(r1, r2):
        return all((a, b) in t.vert for a, b in zip(r1, r2))

    layer = {r: (r,) for r in rows if r[0] == t.start}
    for _ in range(m - 1):
        nxt: dict = {}
        for r, path in layer.items():
            for r2 in rows:
                if r2 not in nxt and below(r, r2):
                    nxt[r2] = path + (r2,)
        layer = nxt
    for r, path in sorted(layer.items()):
        if r[0] == t.finish:
            return path
    return None


def expected_fact_count(t: TilingSystem) -> int:
    return len(t.tiles) + len(t.left) + len(t.right) + len(t.horiz) + len(t.vert) + 2


def cross_check(t: TilingSystem, chase_budget: int, tiling_bounds: tuple) -> dict:
    """Compare the bounded brute-force tiler with the bounded chase on the encoding.

    Neither side is a decision procedure, so ``status`` is one of
    ``"both_true"``, ``"bounded_negative"`` (no tiling within the bounds and no
    answer within the budget), ``"chase_only"`` (the chase found the answer,
    the tiler did not within its bounds), ``"tiler_only_budget"`` (a tiling
    exists but the chase ran out of budget before accepting) or
    ``"disagree"`` (a tiling exists yet the chase terminated without the
    answer).
    """
    max_n, max_m = tiling_bounds
    if max_n < 1 or max_m < 1 or chase_budget < 1:
        raise TilingError("bounds and budget must be at least 1")
    witness = brute_force_tiling(t, max_n, max_m)
    db, prog, q = encode_tiling(t)
    res = bounded_chase(db, prog, max_steps=chase_budget)
    accepted = bool(evaluate_cq(q, res.instance))
    if witness is not None and accepted:
        status = "both_true"
    elif witness is None and not accepted:
        status = "bounded_negative"
    elif witness is None:
        status = "chase_only"
    elif res.terminated:
        status = "disagree"
    else:
        status = "tiler_only_budget"
    return {
        "system": t.to_dict(),
        "tiling_bounds": [max_n, max_m],
        "chase_budget": chase_budget,
        "tiling": [list(r) for r in witness.rows] if witness is not None else None,
        "chase_accepted": accepted,
        "chase_steps": res.budget_spent,
        "chase_terminated": res.terminated,
        "status": status,
        "agree": status in ("both_true", "bounded_negative"),
        # the first-row rule checks Start but not Left, so the encoding
        # matches the grid conditions only when start is a left tile
        "start_in_left": t.start in t.left,
        "facts": len(db),
        "expected_facts": expected_fact_count(t),
    }
