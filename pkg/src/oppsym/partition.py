"""Ordered partitions, ordered partition pairs, and simultaneous refinement.

A cell is identified by its start offset into ``element``.  Splitting keeps
the first fragment at the parent's offset, so corresponding cells of an
isomorphic pair share the same id on top and bottom, and a split can be
undone by merging back along the trail.
"""
from __future__ import annotations

import enum
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from .graph import ColoredGraph, Permutation

_MASK = (1 << 64) - 1
_KEYS: list[int] = []


def vertex_keys(n: int) -> list[int]:
    """Fixed pseudo-random 64-bit key per vertex (splitmix64 of the id)."""
    while len(_KEYS) < n:
        z = (len(_KEYS) + 1) * 0x9E3779B97F4A7C15 & _MASK
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
        _KEYS.append(z ^ (z >> 31))
    return _KEYS


class OrderedPartition:
    """Ordered partition of ``0..n-1`` with O(1) vertex-to-cell lookup.

    ``element`` lists vertices cell by cell, ``cell_of[v]`` is the start
    offset of v's cell and ``cell_end[s]`` the end offset of the cell
    starting at ``s`` (only meaningful at cell starts).  ``cell_hash[s]`` is
    the XOR of the vertex keys in that cell, for cheap set comparison.
    """

    __slots__ = ("n", "element", "pos", "cell_of", "cell_end", "cell_hash", "ncells", "trail",
                 "_cnt")

    def __init__(self, cells: Iterable[Iterable[int]]):
        cells = [list(c) for c in cells]
        self.element = [v for c in cells for v in c]
        n = self.n = len(self.element)
        if sorted(self.element) != list(range(n)):
            raise ValueError("cells must be disjoint and cover 0..n-1")
        if any(not c for c in cells):
            raise ValueError("empty cell")
        self.pos = [0] * n
        self.cell_of = [0] * n
        self.cell_end = [0] * (n + 1)
        self.cell_hash = [0] * (n + 1)
        keys = vertex_keys(n)
        start = 0
        for c in cells:
            end = start + len(c)
            self.cell_end[start] = end
            h = 0
            for i in range(start, end):
                v = self.element[i]
                self.pos[v] = i
                self.cell_of[v] = start
                h ^= keys[v]
            self.cell_hash[start] = h
            start = end
        self.ncells = len(cells)
        self.trail: list[tuple[int, int]] = []
        self._cnt: list[int] | None = None

    @classmethod
    def unit(cls, n: int) -> "OrderedPartition":
        return cls([range(n)] if n else [])

    def copy(self) -> "OrderedPartition":
        new = object.__new__(OrderedPartition)
        new.n = self.n
        new.element = self.element[:]
        new.pos = self.pos[:]
        new.cell_of = self.cell_of[:]
        new.cell_end = self.cell_end[:]
        new.cell_hash = self.cell_hash[:]
        new.ncells = self.ncells
        new.trail = []
        new._cnt = None
        return new

    # ---- inspection

    def starts(self) -> Iterator[int]:
        s, n, end = 0, self.n, self.cell_end
        while s < n:
            yield s
            s = end[s]

    def cell(self, start: int) -> list[int]:
        return self.element[start : self.cell_end[start]]

    def cell_len(self, start: int) -> int:
        return self.cell_end[start] - start

    def cells(self) -> list[list[int]]:
        return [self.cell(s) for s in self.starts()]

    def cell_index(self, start: int) -> int:
        """Ordinal position of the cell starting at ``start``."""
        for i, s in enumerate(self.starts()):
            if s == start:
                return i
        raise KeyError(start)

    def is_discrete(self) -> bool:
        return self.ncells == self.n

    def is_unit(self) -> bool:
        return self.ncells == 1

    def __eq__(self, other) -> bool:
        return isinstance(other, OrderedPartition) and self.cells() == other.cells()

    def __repr__(self) -> str:
        return "[" + " | ".join(",".join(map(str, c)) for c in self.cells()) + "]"

    # ---- mutation with undo

    def mark(self) -> int:
        return len(self.trail)

    def undo(self, mark: int) -> None:
        """Merge back every split made after ``mark`` (element order is not restored)."""
        trail, cell_end, cell_of, element = self.trail, self.cell_end, self.cell_of, self.element
        cell_hash = self.cell_hash
        while len(trail) > mark:
            parent, start = trail.pop()
            end = cell_end[start]
            for i in range(start, end):
                cell_of[element[i]] = parent
            cell_end[parent] = end
            cell_hash[parent] ^= cell_hash[start]
            self.ncells -= 1

    def _new_cell(self, prev: int, start: int, end: int) -> None:
        self.cell_end[prev] = start
        self.cell_end[start] = end
        cell_of, element = self.cell_of, self.element
        owner = cell_of[element[start]]
        keys = _KEYS
        h = 0
        for i in range(start, end):
            v = element[i]
            cell_of[v] = start
            h ^= keys[v]
        self.cell_hash[start] = h
        self.cell_hash[owner] ^= h
        self.trail.append((prev, start))
        self.ncells += 1

    def individualize(self, v: int) -> int:
        """Move ``v`` into a singleton cell just after the rest of its cell.

        The remainder keeps the cell's start; returns the singleton's start.
        """
        s = self.cell_of[v]
        end = self.cell_end[s]
        if end - s < 2:
            raise ValueError(f"vertex {v} is already a singleton")
        element, pos = self.element, self.pos
        i = pos[v]
        last = end - 1
        w = element[last]
        element[last], element[i] = v, w
        pos[v], pos[w] = last, i
        self._new_cell(s, last, end)
        return last

    def same_cell_contents(self, other: "OrderedPartition", start: int) -> bool:
        """Whether the cells at ``start`` hold the same vertices (hash, then exact)."""
        if self.cell_hash[start] != other.cell_hash[start]:
            return False
        end = self.cell_end[start]
        return set(self.element[start:end]) == set(other.element[start:end])

    def scratch(self) -> list[int]:
        if self._cnt is None:
            self._cnt = [0] * self.n
        return self._cnt


def partition_from_cells(cells: Sequence[Sequence[int]]) -> OrderedPartition:
    return OrderedPartition(cells)


# ---------------------------------------------------------------- refinement core


@dataclass
class Step:
    """One application of a refining cell.

    ``events`` holds ``(parent_start, fragment_sizes, fragment_keys)`` for
    each cell split, in ascending parent order.  ``sigs`` maps each newly
    created cell to its edge counts into the current cells (enhanced mode).
    """

    index: int
    refiner: int
    size: int
    events: list[tuple[int, tuple[int, ...], tuple[int, ...]]]
    sigs: dict[int, dict[int, int]] | None = None


def cell_signature(part: OrderedPartition, adj, start: int) -> dict[int, int]:
    """Edge counts from the cell at ``start`` into every cell it touches."""
    sig: dict[int, int] = {}
    cell_of = part.cell_of
    for i in range(start, part.cell_end[start]):
        for u in adj[part.element[i]]:
            c = cell_of[u]
            sig[c] = sig.get(c, 0) + 1
    return sig


def refine_steps(
    part: OrderedPartition,
    adj: Sequence[Sequence[int]],
    seeds: Iterable[int],
    want_sigs: bool = False,
) -> Iterator[Step]:
    """Refine ``part`` in place to the coarsest equitable refinement, one step at a time.

    The worklist is FIFO.  When a cell splits, all new fragments are queued
    if the parent was queued, otherwise all but the first largest one.
    Within a split cell untouched vertices come first, then touched ones by
    ascending count; ties keep element order among touched vertices.
    """
    element, pos, cell_of, cell_end = part.element, part.pos, part.cell_of, part.cell_end
    cnt = part.scratch()
    queue = deque()
    queued = set()
    for s in seeds:
        if s not in queued:
            queue.append(s)
            queued.add(s)
    index = 0
    while queue:
        w = queue.popleft()
        queued.discard(w)
        wend = cell_end[w]
        index += 1
        touched: list[int] = []
        for x in element[w:wend]:
            for u in adj[x]:
                if cnt[u] == 0:
                    touched.append(u)
                cnt[u] += 1
        by_cell: dict[int, list[int]] = {}
        for u in touched:
            c = cell_of[u]
            lst = by_cell.get(c)
            if lst is None:
                by_cell[c] = [u]
            else:
                lst.append(u)
        events = []
        created = []
        single = wend - w == 1
        for c in sorted(by_cell):
            end = cell_end[c]
            csize = end - c
            if csize == 1:
                continue
            tv = by_cell[c]
            k = len(tv)
            if k == csize and (single or len({cnt[u] for u in tv}) == 1):
                continue
            region = end - k
            if k < csize:
                # touched vertices to the back of the cell
                outside = [u for u in tv if pos[u] < region]
                if outside:
                    free = [i for i in range(region, end) if cnt[element[i]] == 0]
                    for u, i in zip(outside, free):
                        j = pos[u]
                        x = element[i]
                        element[i], element[j] = u, x
                        pos[u], pos[x] = i, j
            seg = element[region:end]
            if not single:
                seg.sort(key=cnt.__getitem__)
                element[region:end] = seg
                for i, u in enumerate(seg, region):
                    pos[u] = i
            # fragment boundaries
            bounds = [c] if k < csize else []
            keys = [0] if k < csize else []
            last = None
            for i, u in enumerate(seg, region):
                key = cnt[u]
                if key != last:
                    bounds.append(i)
                    keys.append(key)
                    last = key
            bounds.append(end)
            sizes = tuple(bounds[i + 1] - bounds[i] for i in range(len(bounds) - 1))
            for i in range(1, len(sizes)):
                part._new_cell(bounds[i - 1], bounds[i], bounds[i + 1])
                created.append(bounds[i])
            events.append((c, sizes, tuple(keys)))
            frags = bounds[:-1]
            if c in queued:
                for f in frags[1:]:
                    queue.append(f)
                    queued.add(f)
            else:
                big = max(range(len(sizes)), key=lambda i: (sizes[i], -i))
                for i, f in enumerate(frags):
                    if i != big:
                        queue.append(f)
                        queued.add(f)
        for u in touched:
            cnt[u] = 0
        sigs = None
        if want_sigs:
            sigs = {s: cell_signature(part, adj, s) for s in created}
        yield Step(index, w, wend - w, events, sigs)


# ---------------------------------------------------------------- OPP


class OppClass(enum.Enum):
    NON_ISOMORPHIC = "non-isomorphic"
    ISOMORPHIC = "isomorphic"
    MATCHING = "matching"
    DISCRETE = "discrete"
    UNIT = "unit"


class RefineMode(str, enum.Enum):
    BASELINE = "baseline"
    ENHANCED = "enhanced"


@dataclass
class OPP:
    """A top/bottom pair of ordered partitions of the same vertex set."""

    top: OrderedPartition
    bottom: OrderedPartition

    def __post_init__(self):
        if self.top.n != self.bottom.n:
            raise ValueError("top and bottom partitions differ in size")

    @property
    def n(self) -> int:
        return self.top.n

    @classmethod
    def from_cells(cls, top, bottom) -> "OPP":
        return cls(OrderedPartition(top), OrderedPartition(bottom))

    def copy(self) -> "OPP":
        return OPP(self.top.copy(), self.bottom.copy())

    def cell_pairs(self) -> list[tuple[list[int], list[int]]]:
        return list(zip(self.top.cells(), self.bottom.cells()))

    def __repr__(self) -> str:
        return f"OPP(top={self.top!r}, bottom={self.bottom!r})"


def is_isomorphic(p: OPP) -> bool:
    t, b = p.top, p.bottom
    if t.ncells != b.ncells:
        return False
    return all(
        bs == ts and b.cell_end[bs] == t.cell_end[ts] for ts, bs in zip(t.starts(), b.starts())
    )


def classify(p: OPP) -> OppClass:
    """Most specific class of an OPP."""
    if not is_isomorphic(p):
        return OppClass.NON_ISOMORPHIC
    if p.top.is_discrete():
        return OppClass.DISCRETE
    for ts in p.top.starts():
        if p.top.cell_len(ts) > 1 and set(p.top.cell(ts)) != set(p.bottom.cell(ts)):
            return OppClass.ISOMORPHIC
    return OppClass.UNIT if p.top.is_unit() else OppClass.MATCHING


def opp_permutations(p: OPP, bound: int = 10) -> set[Permutation]:
    """Every bijection mapping each top cell onto its bottom cell (small n only)."""
    if p.n > bound:
        raise ValueError(f"enumeration bound exceeded: n={p.n} > {bound}")
    if not is_isomorphic(p):
        return set()
    pairs = p.cell_pairs()
    out = set()
    for choice in itertools.product(*(itertools.permutations(b) for _, b in pairs)):
        image = [0] * p.n
        for (tcell, _), bcell in zip(pairs, choice):
            for u, v in zip(tcell, bcell):
                image[u] = v
        out.add(Permutation.from_image(image))
    return out


def count_permutations(p: OPP) -> int:
    if not is_isomorphic(p):
        return 0
    return math.prod(math.factorial(len(c)) for c in p.top.cells())


def is_equitable(pi: OrderedPartition, g: ColoredGraph) -> bool:
    for s in pi.starts():
        cell = pi.cell(s)
        first = None
        for v in cell:
            sig: dict[int, int] = {}
            for u in g.adj[v]:
                c = pi.cell_of[u]
                sig[c] = sig.get(c, 0) + 1
            if first is None:
                first = sig
            elif sig != first:
                return False
    return True


def initial_partition(g: ColoredGraph) -> OrderedPartition:
    """Cells by color, split by ascending degree, refined to equitable."""
    order = sorted(range(g.n), key=lambda v: (g.color[v], len(g.adj[v]), v))
    cells: list[list[int]] = []
    last = None
    for v in order:
        key = (g.color[v], len(g.adj[v]))
        if key != last:
            cells.append([])
            last = key
        cells[-1].append(v)
    part = OrderedPartition(cells)
    for _ in refine_steps(part, g.adj, list(part.starts())):
        pass
    part.trail.clear()
    return part


def initial_opp(g: ColoredGraph) -> OPP:
    top = initial_partition(g)
    return OPP(top, top.copy())


def refine_one(
    pi: OrderedPartition,
    g: ColoredGraph,
    trace_out: list | None = None,
    seeds: Iterable[int] | None = None,
) -> OrderedPartition:
    """Coarsest equitable refinement of a copy of ``pi``; steps appended to ``trace_out``."""
    part = pi.copy()
    if seeds is None:
        seeds = list(part.starts())
    for st in refine_steps(part, g.adj, seeds):
        if trace_out is not None and st.events:
            trace_out.append(st)
    part.trail.clear()
    return part


def individualize(p: OPP, target: int, image: int) -> OPP:
    """Copy of ``p`` with ``target`` split off on top and ``image`` on the bottom."""
    s = p.top.cell_of[target]
    if p.top.cell_len(s) < 2:
        raise ValueError(f"target {target} is not in a non-singleton top cell")
    if p.bottom.cell_of[image] != s or p.bottom.cell_len(s) != p.top.cell_len(s):
        raise ValueError(f"image {image} is not in the bottom cell corresponding to {target}")
    q = p.copy()
    q.top.individualize(target)
    q.bottom.individualize(image)
    q.top.trail.clear()
    q.bottom.trail.clear()
    return q


# ---------------------------------------------------------------- simultaneous refinement


@dataclass
class Conflict:
    """Refinement found the OPP to encode no automorphism."""

    step: int
    reason: str  # split-mismatch | conformance | size

    def __bool__(self) -> bool:  # a Conflict is a failure value
        return False


@dataclass
class RefinedOPP:
    opp: OPP
    trace: "TopTrace | None" = None

    def __bool__(self) -> bool:
        return True


RefineOutcome = RefinedOPP | Conflict


@dataclass
class TopTrace:
    seeds: list[int]
    steps: list[Step]
    seed_sigs: dict[int, dict[int, int]] | None = None
    events: list = field(default_factory=list)

    def __post_init__(self):
        self.events = [ev for st in self.steps for ev in st.events]


Logger = Callable[[str], None]


def _log_step(log: Logger | None, st: Step) -> None:
    if log is None:
        return
    for parent, sizes, _ in st.events:
        log(f"step {st.index}: refine-cell={st.refiner} split parent={parent} "
            f"sizes=[{','.join(map(str, sizes))}]")


def refine_top(
    top: OrderedPartition, adj, seeds: Sequence[int], mode: RefineMode, log: Logger | None = None
) -> TopTrace:
    """Refine the top partition in place and keep the trace the bottom replays."""
    enhanced = mode is RefineMode.ENHANCED
    seed_sigs = {s: cell_signature(top, adj, s) for s in seeds} if enhanced else None
    steps = []
    for st in refine_steps(top, adj, seeds, want_sigs=enhanced):
        _log_step(log, st)
        steps.append(st)
    return TopTrace(list(seeds), steps, seed_sigs)


def replay_bottom(
    bottom: OrderedPartition,
    adj,
    trace: TopTrace,
    mode: RefineMode,
    log: Logger | None = None,
    conformance: bool = True,
) -> Conflict | None:
    """Refine the bottom in place against the top trace; a Conflict if they diverge.

    ``conformance=False`` drops the enhanced cell-signature check and keeps
    only the step-by-step split comparison.
    """
    conflict = _replay(bottom, adj, trace, mode, log, conformance)
    if conflict is not None and log is not None:
        log(f"conflict: step {conflict.step} reason={conflict.reason}")
    return conflict


def _replay(bottom, adj, trace: TopTrace, mode: RefineMode, log, conformance) -> Conflict | None:
    if mode is RefineMode.ENHANCED:
        for s in trace.seeds if conformance else ():
            if cell_signature(bottom, adj, s) != trace.seed_sigs[s]:
                return Conflict(0, "conformance")
        tsteps = trace.steps
        i = 0
        for st in refine_steps(bottom, adj, trace.seeds, want_sigs=True):
            _log_step(log, st)
            if i >= len(tsteps):
                return Conflict(st.index, "split-mismatch")
            t = tsteps[i]
            if st.refiner != t.refiner or st.size != t.size or st.events != t.events:
                return Conflict(st.index, "split-mismatch")
            if conformance and st.sigs != t.sigs:
                return Conflict(st.index, "conformance")
            i += 1
        if i != len(tsteps):
            return Conflict(i, "size")
        return None
    flat = trace.events
    j = 0
    last = 0
    for st in refine_steps(bottom, adj, trace.seeds):
        _log_step(log, st)
        last = st.index
        for parent, sizes, _ in st.events:
            if j >= len(flat) or flat[j][0] != parent or flat[j][1] != sizes:
                return Conflict(st.index, "split-mismatch")
            j += 1
    if j != len(flat):
        return Conflict(last, "size")
    return None


def _refine(p: OPP, g: ColoredGraph, mode: RefineMode, seeds, log, conformance=True) -> RefineOutcome:
    if not is_isomorphic(p):
        raise ValueError("refinement requires an isomorphic OPP")
    q = p.copy()
    if seeds is None:
        seeds = list(q.top.starts())
    trace = refine_top(q.top, g.adj, list(seeds), mode, log)
    conflict = replay_bottom(q.bottom, g.adj, trace, mode, log, conformance)
    if conflict is not None:
        return conflict
    q.top.trail.clear()
    q.bottom.trail.clear()
    return RefinedOPP(q, trace)


def refine_baseline(
    p: OPP, g: ColoredGraph, seeds: Iterable[int] | None = None, log: Logger | None = None
) -> RefineOutcome:
    """Top to equitable, then bottom, comparing split locations at each bottom split."""
    return _refine(p, g, RefineMode.BASELINE, seeds, log)


def refine_enhanced(
    p: OPP,
    g: ColoredGraph,
    seeds: Iterable[int] | None = None,
    log: Logger | None = None,
    conformance: bool = True,
) -> RefineOutcome:
    """Like :func:`refine_baseline`, but the bottom must mirror the top step by step
    (including steps that split nothing) and every new bottom cell must have the
    same edge counts into the current cells as its top counterpart."""
    return _refine(p, g, RefineMode.ENHANCED, seeds, log, conformance)
