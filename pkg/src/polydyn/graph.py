"""Functional graphs of maps on A^N(F_p) / P^N(F_p) and their exact census."""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .maps import MapSpec
from .space import Space, decode, encode, point_coords

DEFAULT_MAX_POINTS = 10**8
DOT_MAX_POINTS = 10**4
_CHUNK = 1 << 18


class ResourceError(RuntimeError):
    """The requested space does not fit the configured memory budget."""


def max_points() -> int:
    """Point budget, overridable with the POLYDYN_MAX_POINTS environment variable."""
    return int(os.environ.get("POLYDYN_MAX_POINTS", DEFAULT_MAX_POINTS))


@dataclass(frozen=True)
class SuccessorTable:
    space: Space
    succ: np.ndarray

    def __post_init__(self):
        if self.succ.shape != (self.space.size,):
            raise ValueError("successor table length must equal the space size")

    def __len__(self):
        return self.succ.size


@dataclass(frozen=True)
class OrbitStats:
    tail: int
    period: int


@dataclass
class GraphStats:
    per_count: dict[int, int]
    pre_count: dict[int, int]
    total_periodic: int
    max_tail: int
    leaf_count: int
    cycle_count: int
    size: int

    def rows(self) -> list[tuple[int, str, int]]:
        """(n_or_m, kind, count) rows in CSV order: periods first, then tails."""
        out = [(n, "per", c) for n, c in sorted(self.per_count.items())]
        out += [(m, "pre", c) for m, c in sorted(self.pre_count.items())]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n_or_m", "kind", "count"])
        writer.writerows(self.rows())
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "total_periodic": self.total_periodic,
            "max_tail": self.max_tail,
            "leaf_count": self.leaf_count,
            "cycle_count": self.cycle_count,
            "per_count": {str(k): v for k, v in sorted(self.per_count.items())},
            "pre_count": {str(k): v for k, v in sorted(self.pre_count.items())},
        }


def stats_from_csv(text: str) -> tuple[dict[int, int], dict[int, int]]:
    """Parse the CSV written by :meth:`GraphStats.to_csv` back to (per, pre)."""
    per: dict[int, int] = {}
    pre: dict[int, int] = {}
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != ["n_or_m", "kind", "count"]:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    for row in reader:
        target = {"per": per, "pre": pre}[row["kind"]]
        target[int(row["n_or_m"])] = int(row["count"])
    return per, pre


@dataclass
class Census:
    """Per-point tails and periods plus the aggregate statistics."""

    table: SuccessorTable
    tail: np.ndarray
    period: np.ndarray
    stats: GraphStats
    indegree: np.ndarray = field(repr=False)

    def orbit(self, index: int) -> OrbitStats:
        return OrbitStats(int(self.tail[index]), int(self.period[index]))

    def orbit_at(self, coords) -> OrbitStats:
        from .space import point_index

        return self.orbit(point_index(self.table.space, coords))


def build_successor_table(
    spec: MapSpec, space: Space, cap: int | None = None, threads: int = 1
) -> SuccessorTable:
    if spec.dim != space.dim:
        raise ValueError(f"map on dimension {spec.dim} cannot act on {space}")
    if not space.projective and not spec.supports_affine():
        raise ValueError("this map only acts on projective space")
    cap = max_points() if cap is None else cap
    n = space.size
    if n > cap:
        raise ResourceError(f"{space} has {n} points, over the budget of {cap}")
    succ = np.empty(n, dtype=np.int64)

    def fill(start: int) -> None:
        stop = min(start + _CHUNK, n)
        coords = decode(space, np.arange(start, stop, dtype=np.int64))
        if space.projective:
            images = spec.projective_images(coords, space.p)
        else:
            images = spec.affine_images(coords, space.p) if space.dim else coords
        succ[start:stop] = encode(space, images) if space.dim or space.projective else 0

    starts = range(0, n, _CHUNK)
    if threads > 1 and n > _CHUNK:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(fill, starts))
    else:
        for s in starts:
            fill(s)
    if n and (succ.min() < 0 or succ.max() >= n):
        raise AssertionError("map produced an index outside the space")
    return SuccessorTable(space, succ)


def table_from_array(space: Space, succ) -> SuccessorTable:
    return SuccessorTable(space, np.asarray(succ, dtype=np.int64))


@numba.njit(cache=True)
def _census_kernel(succ, indeg):
    n = succ.size
    deg = indeg.copy()
    order = np.empty(n, dtype=np.int64)
    head = 0
    tail_ptr = 0
    for i in range(n):
        if deg[i] == 0:
            order[tail_ptr] = i
            tail_ptr += 1
    # peel sources; survivors are exactly the cyclic points
    while head < tail_ptr:
        x = order[head]
        head += 1
        y = succ[x]
        deg[y] -= 1
        if deg[y] == 0:
            order[tail_ptr] = y
            tail_ptr += 1
    peeled = tail_ptr
    period = np.zeros(n, dtype=np.int64)
    tails = np.zeros(n, dtype=np.int64)
    cycles = 0
    for i in range(n):
        if deg[i] > 0 and period[i] == 0:
            length = 1
            y = succ[i]
            while y != i:
                length += 1
                y = succ[y]
            period[i] = length
            y = succ[i]
            while y != i:
                period[y] = length
                y = succ[y]
            cycles += 1
    # reverse peel order reaches f(x) before x
    for j in range(peeled - 1, -1, -1):
        x = order[j]
        tails[x] = tails[succ[x]] + 1
        period[x] = period[succ[x]]
    return tails, period, cycles


def orbit_census(table: SuccessorTable) -> Census:
    succ = table.succ
    indeg = np.bincount(succ, minlength=succ.size).astype(np.int64)
    tails, period, cycles = _census_kernel(succ, indeg)
    periodic = tails == 0
    per_vals, per_counts = np.unique(period[periodic], return_counts=True)
    pre_vals, pre_counts = np.unique(tails, return_counts=True)
    stats = GraphStats(
        per_count={int(k): int(v) for k, v in zip(per_vals, per_counts)},
        pre_count={int(k): int(v) for k, v in zip(pre_vals, pre_counts)},
        total_periodic=int(periodic.sum()),
        max_tail=int(tails.max()) if tails.size else 0,
        leaf_count=int((indeg == 0).sum()),
        cycle_count=int(cycles),
        size=int(succ.size),
    )
    return Census(table, tails, period, stats, indeg)


def census(spec: MapSpec, space: Space, cap: int | None = None, threads: int = 1) -> Census:
    return orbit_census(build_successor_table(spec, space, cap, threads))


def preimage_census(table: SuccessorTable) -> np.ndarray:
    """In-degree of every point."""
    return np.bincount(table.succ, minlength=len(table)).astype(np.int64)


def leaves(table: SuccessorTable) -> np.ndarray:
    """Indices of points without preimages."""
    return np.flatnonzero(preimage_census(table) == 0)


def export_dot(table: SuccessorTable, annotations: Census | None = None) -> str:
    """Graphviz DOT text: one node per point, labelled by coordinates (and tail, period)."""
    n = len(table)
    if n > DOT_MAX_POINTS:
        raise ResourceError(f"refusing to draw {n} nodes (cap {DOT_MAX_POINTS})")
    space = table.space
    lines = [f'digraph "{space}" {{']
    for i in range(n):
        coords = point_coords(space, i)
        label = ":".join(map(str, coords)) if space.projective else ",".join(map(str, coords))
        label = f"({label})"
        if annotations is not None:
            label += f"\\n(t={int(annotations.tail[i])}, c={int(annotations.period[i])})"
        lines.append(f'  {i} [label="{label}"];')
    for i in range(n):
        lines.append(f"  {i} -> {int(table.succ[i])};")
    lines.append("}")
    return "\n".join(lines) + "\n"
