"""Depth-first search over ordered partition pairs for automorphism generators.

The leftmost path fixes each chosen target to itself and so walks down a
stabilizer chain.  Every other image tried at a leftmost node opens a coset
subtree; the first automorphism found there closes it (coset pruning), and
images already known to be in the target's orbit are skipped (orbit
pruning).  Non-leftmost nodes that become matching are settled in one step.
"""
from __future__ import annotations

import enum
import heapq
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .graph import ColoredGraph, Permutation, is_automorphism
from .oracle import OrbitPartition
from .partition import (
    OPP,
    Conflict,
    Logger,
    OppClass,
    RefineMode,
    TopTrace,
    classify,
    initial_partition,
    refine_top,
    replay_bottom,
)

DEFAULT_MAX_NODES = 10**9


class Heuristic(str, enum.Enum):
    FIRST = "first"
    LARGEST = "largest"
    SMALLEST = "smallest-nonsingleton"


class TheoremViolation(AssertionError):
    """An enhanced-refined matching OPP produced a non-automorphism."""


class LeafResult(enum.Enum):
    GENERATOR = "generator"
    COSET_FAIL = "coset-fail"
    CONFLICT = "conflict"


@dataclass
class ConflictRecord:
    level: int
    path: tuple[tuple[int, int], ...] | None
    kind: str  # refine | bad-leaf
    reason: str = ""
    anticipated_level: int | None = None

    @property
    def depth(self) -> int | None:
        if self.anticipated_level is None:
            return None
        return self.level - self.anticipated_level


@dataclass
class SearchStats:
    mode: str
    heuristic: str
    nodes: int = 0
    refine_conflicts: int = 0
    bad_leaves: int = 0
    matching_leaves: int = 0
    discrete_leaves: int = 0
    generators: list[Permutation] = field(default_factory=list)
    group_order: int = 1
    level_orbits: list[tuple[int, int]] = field(default_factory=list)
    leftmost_targets: list[int] = field(default_factory=list)
    conflict_records: list[ConflictRecord] | None = None
    time_ms: float = 0.0
    complete: bool = True

    @property
    def conflicts(self) -> int:
        """Failed nodes: refinement conflicts plus leaves that are not automorphisms."""
        return self.refine_conflicts + self.bad_leaves


# ---------------------------------------------------------------- target selection


def _pick_cell(cands: Iterable[tuple[int, int]], heuristic: Heuristic) -> int:
    """``cands`` are ``(start, size)`` of non-singleton cells in ascending start order."""
    cands = list(cands)
    if not cands:
        raise ValueError("no non-singleton cell to branch on")
    if heuristic is Heuristic.FIRST:
        return cands[0][0]
    if heuristic is Heuristic.LARGEST:
        return max(cands, key=lambda c: (c[1], -c[0]))[0]
    return min(cands, key=lambda c: (c[1], c[0]))[0]


def _target_in(top_cell: list[int], bottom_cell: list[int]) -> int:
    missing = set(top_cell).difference(bottom_cell)
    return min(missing or top_cell)


def select_target(p: OPP, heuristic: Heuristic | str = Heuristic.FIRST) -> tuple[int, int]:
    """Branching choice ``(cell index, target vertex)``.

    The heuristic picks among non-singleton cells whose top and bottom differ
    as sets, or among all non-singleton cells when none differ.  The target is
    the smallest top vertex missing from the bottom cell, else the smallest
    top vertex.  Vertex ids, not stored order, decide: stored order inside a
    cell depends on search history.
    """
    heuristic = Heuristic(heuristic)
    top, bot = p.top, p.bottom
    nonsingle = [(s, top.cell_len(s)) for s in top.starts() if top.cell_len(s) > 1]
    if not nonsingle:
        raise ValueError("discrete OPP has no target")
    differ = [c for c in nonsingle if set(top.cell(c[0])) != set(bot.cell(c[0]))]
    start = _pick_cell(differ or nonsingle, heuristic)
    return top.cell_index(start), _target_in(top.cell(start), bot.cell(start))


# ---------------------------------------------------------------- pruning primitives


def matching_permutation(p: OPP) -> Permutation:
    """Identity on non-singleton cells, top to bottom on singleton cells."""
    moved = {}
    for s in p.top.starts():
        if p.top.cell_len(s) == 1:
            moved[p.top.element[s]] = p.bottom.element[s]
    return Permutation(p.n, moved)


def matching_prune(
    p: OPP, g: ColoredGraph, mode: RefineMode | str, check: bool = True
) -> Permutation | None:
    """Settle a matching OPP: its permutation if it is an automorphism, else ``None``.

    Under enhanced refinement the permutation must be an automorphism; with
    ``check`` that is verified and a failure raises :class:`TheoremViolation`.
    """
    if classify(p) not in (OppClass.MATCHING, OppClass.UNIT, OppClass.DISCRETE):
        raise ValueError("OPP is not matching")
    alpha = matching_permutation(p)
    if RefineMode(mode) is RefineMode.ENHANCED:
        if check and not is_automorphism(g, alpha):
            raise TheoremViolation(f"matching permutation {alpha} is not an automorphism")
        return alpha
    return alpha if is_automorphism(g, alpha) else None


def handle_leaf(p: OPP | Conflict, g: ColoredGraph, mode: RefineMode | str) -> tuple[LeafResult, Permutation | None]:
    if isinstance(p, Conflict):
        return LeafResult.CONFLICT, None
    cls = classify(p)
    if cls is OppClass.NON_ISOMORPHIC:
        return LeafResult.CONFLICT, None
    if cls is OppClass.DISCRETE:
        alpha = matching_permutation(p)
        ok = is_automorphism(g, alpha)
        return (LeafResult.GENERATOR, alpha) if ok else (LeafResult.COSET_FAIL, None)
    alpha = matching_prune(p, g, mode)
    return (LeafResult.GENERATOR, alpha) if alpha is not None else (LeafResult.COSET_FAIL, None)


def orbit_prune(orbits: OrbitPartition, tried: Iterable[int], candidate: int) -> bool:
    """Skip ``candidate`` if it shares an orbit with an image already tried at this level."""
    root = orbits.find(candidate)
    return any(orbits.find(x) == root for x in tried)


# ---------------------------------------------------------------- search engine


@dataclass
class _Frame:
    level: int
    leftmost: bool
    start: int
    target: int
    first: list[int]  # images tried before the rest of the cell
    rest: list[int]  # heap over the bottom cell; members of ``first`` are skipped
    size: int
    trace: TopTrace
    top_mark0: int
    top_mark1: int
    bot_mark: int
    coset_root: int
    idx: int = 0
    tried: list[int] = field(default_factory=list)
    pending: int | None = None
    skip: set[int] = field(default_factory=set)

    def __post_init__(self):
        self.skip = set(self.first)


class _Search:
    def __init__(
        self,
        g: ColoredGraph,
        mode: RefineMode,
        heuristic: Heuristic,
        max_nodes: int,
        timeout_ms: float | None,
        record_conflicts: bool,
        check_theorem: bool,
        log: Logger | None,
        on_matching: Callable[[Permutation, int], None] | None,
    ):
        self.g = g
        self.adj = g.adj
        self.mode = mode
        self.heuristic = heuristic
        self.max_nodes = max_nodes
        self.deadline = None if timeout_ms is None else time.perf_counter() + timeout_ms / 1000
        self.check = check_theorem
        self.log = log
        self.on_matching = on_matching
        self.stats = SearchStats(mode.value, heuristic.value)
        if record_conflicts:
            self.stats.conflict_records = []
        self.orbits = OrbitPartition(g.n)
        self.stack: list[_Frame] = []
        self.path: list[tuple[int, int]] = []

    # ---- bookkeeping

    def _conflict(self, level: int, kind: str, reason: str = "") -> None:
        st = self.stats
        if kind == "refine":
            st.refine_conflicts += 1
        else:
            st.bad_leaves += 1
        if st.conflict_records is not None:
            st.conflict_records.append(ConflictRecord(level, tuple(self.path), kind, reason))

    def _accept(self, alpha: Permutation, coset_root: int) -> None:
        self.stats.generators.append(alpha)
        self.orbits.add_generator(alpha)
        del self.stack[coset_root + 1 :]
        root = self.stack[coset_root]
        root.tried.append(root.pending)
        root.pending = None

    def _out_of_budget(self) -> bool:
        if self.stats.nodes >= self.max_nodes:
            return True
        return self.deadline is not None and time.perf_counter() > self.deadline

    # ---- node expansion

    def _push(self, level, leftmost, start, target, first, coset_root) -> None:
        top = self.top
        rest = self.bot.element[start : self.bot.cell_end[start]]
        heapq.heapify(rest)
        m0 = top.mark()
        single = top.individualize(target)
        if self.log:
            self.log(f"level {level}: individualize {target} (cell {start})")
        trace = refine_top(top, self.adj, [single], self.mode, self.log)
        frame = _Frame(level, leftmost, start, target, first, rest, len(rest), trace, m0, top.mark(),
                       self.bot.mark(), coset_root)
        if leftmost:
            frame.coset_root = len(self.stack)
            self.stats.leftmost_targets.append(target)
        self.stack.append(frame)

    def _open_leftmost(self, level: int, hint: int) -> None:
        top = self.top
        if top.ncells == top.n:
            return
        if self.heuristic is Heuristic.FIRST:
            s, end = hint, top.cell_end
            while end[s] - s == 1:
                s = end[s]
            start = s
        else:
            start = _pick_cell(
                ((s, top.cell_len(s)) for s in top.starts() if top.cell_len(s) > 1), self.heuristic
            )
        target = min(top.element[start : top.cell_end[start]])
        self._push(level, True, start, target, [target], -1)

    def _open_other(self, level: int, coset_root: int) -> None:
        top, bot = self.top, self.bot
        root = self.stack[coset_root]
        dirty = set()
        for a, b in top.trail[root.top_mark0 :]:
            dirty.add(a)
            dirty.add(b)
        for a, b in bot.trail[root.bot_mark :]:
            dirty.add(a)
            dirty.add(b)
        moved = {}
        differ = []
        te, be, tend = top.element, bot.element, top.cell_end
        th, bh = top.cell_hash, bot.cell_hash
        for s in dirty:
            e = tend[s]
            if e - s == 1:
                if te[s] != be[s]:
                    moved[te[s]] = be[s]
            elif th[s] != bh[s]:
                differ.append(s)
        if not differ:
            alpha = Permutation(top.n, moved)
            if self._settle_matching(alpha, level, coset_root, dirty):
                return
            # hash collision: the OPP was not matching after all
            differ = [s for s in dirty if tend[s] - s > 1 and not top.same_cell_contents(bot, s)]
        differ.sort()
        start = _pick_cell(((s, tend[s] - s) for s in differ), self.heuristic)
        # vertices whose cell changed on either side since the coset root
        touched = set()
        for part, mark in ((top, root.top_mark0), (bot, root.bot_mark)):
            el, end = part.element, part.cell_end
            for _, b in part.trail[mark:]:
                touched.update(el[b : end[b]])
        tcell_of, bcell_of = top.cell_of, bot.cell_of
        t_only = [v for v in touched if tcell_of[v] == start and bcell_of[v] != start]
        b_only = [v for v in touched if bcell_of[v] == start and tcell_of[v] != start]
        b_only.sort()
        self._push(level, False, start, min(t_only), b_only, coset_root)

    def _settle_matching(self, alpha: Permutation, level: int, coset_root: int, dirty) -> bool:
        """Handle a (hash-)matching node; ``False`` if it turns out not to be matching."""
        top, bot = self.top, self.bot
        discrete = top.ncells == top.n
        if self.mode is RefineMode.ENHANCED and not self.check:
            ok = True
        else:
            ok = is_automorphism(self.g, alpha)
        if not ok:
            tend = top.cell_end
            if any(tend[s] - s > 1 and not top.same_cell_contents(bot, s) for s in dirty):
                return False
        if discrete:
            self.stats.discrete_leaves += 1
        else:
            self.stats.matching_leaves += 1
            if self.on_matching is not None:
                self.on_matching(alpha, level)
        if ok:
            self._accept(alpha, coset_root)
        elif self.mode is RefineMode.ENHANCED:
            raise TheoremViolation(
                f"enhanced-refined {'discrete' if discrete else 'matching'} OPP at level "
                f"{level} gives non-automorphism {alpha}"
            )
        else:
            self._conflict(level, "bad-leaf", "discrete" if discrete else "matching")
        return True

    def _raw_next(self, f: _Frame) -> int | None:
        if f.idx < len(f.first):
            f.idx += 1
            return f.first[f.idx - 1]
        rest, skip = f.rest, f.skip
        while rest:
            y = heapq.heappop(rest)
            if y not in skip:
                return y
        return None

    def _next_image(self, f: _Frame) -> int | None:
        if not f.leftmost or f.idx == 0:
            return self._raw_next(f)
        orbits = self.orbits
        while True:
            # every remaining image already lies in an explored orbit
            roots = {orbits.find(x) for x in f.tried}
            roots.add(orbits.find(f.target))
            if sum(orbits.size[r] for r in roots) >= f.size:
                return None
            y = self._raw_next(f)
            if y is None or orbits.find(y) not in roots:
                return y

    def run(self) -> tuple[list[Permutation], SearchStats]:
        t0 = time.perf_counter()
        st = self.stats
        g = self.g
        self.top = initial_partition(g)
        self.bot = self.top.copy()
        st.nodes = 1
        self._open_leftmost(0, 0)
        top, bot, stack = self.top, self.bot, self.stack
        while stack:
            if self._out_of_budget():
                st.complete = False
                break
            f = stack[-1]
            top.undo(f.top_mark1)
            bot.undo(f.bot_mark)
            if f.pending is not None:
                f.tried.append(f.pending)
                f.pending = None
            y = self._next_image(f)
            if y is None:
                if f.leftmost:
                    size = self.orbits.orbit_size(f.target)
                    st.level_orbits.append((f.target, size))
                    st.group_order *= size
                top.undo(f.top_mark0)
                stack.pop()
                continue
            st.nodes += 1
            del self.path[f.level :]
            self.path.append((f.target, y))
            child_left = f.leftmost and y == f.target
            if f.leftmost and not child_left:
                f.pending = y
            bot.individualize(y)
            conflict = replay_bottom(bot, self.adj, f.trace, self.mode, self.log)
            if conflict is not None:
                self._conflict(f.level + 1, "refine", conflict.reason)
                continue
            if child_left:
                self._open_leftmost(f.level + 1, f.start)
            else:
                self._open_other(f.level + 1, f.coset_root)
        st.level_orbits.reverse()
        st.time_ms = (time.perf_counter() - t0) * 1000
        return st.generators, st


def search(
    g: ColoredGraph,
    mode: RefineMode | str = RefineMode.ENHANCED,
    heuristic: Heuristic | str = Heuristic.FIRST,
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
    timeout_ms: float | None = None,
    record_conflicts: bool = False,
    check_theorem: bool = True,
    log: Logger | None = None,
    on_matching: Callable[[Permutation, int], None] | None = None,
) -> tuple[list[Permutation], SearchStats]:
    """Find generators of Aut(g).

    ``group_order`` is the product of the target orbit sizes along the
    leftmost path; it is exact only when ``stats.complete`` is true.
    """
    return _Search(
        g, RefineMode(mode), Heuristic(heuristic), max_nodes, timeout_ms,
        record_conflicts, check_theorem, log, on_matching,
    ).run()


# ---------------------------------------------------------------- mode comparison


@dataclass
class ComparisonReport:
    baseline: SearchStats
    enhanced: SearchStats
    histogram: dict[int, int]
    unmatched: int
    comparable: bool

    @property
    def orders_equal(self) -> bool:
        return self.baseline.group_order == self.enhanced.group_order


def conflict_depths(baseline: list[ConflictRecord], enhanced: list[ConflictRecord]) -> tuple[dict[int, int], int]:
    """Attribute each baseline conflict to the enhanced conflict at or above it.

    Returns the depth histogram ``{d: count}`` with ``d = l_n - l`` and the
    number of baseline conflicts with no enhanced ancestor.
    """
    enh = {r.path: r.level for r in enhanced}
    levels = sorted(set(enh.values()))
    hist: dict[int, int] = {}
    unmatched = 0
    for r in baseline:
        for lvl in levels:
            if lvl > r.level:
                break
            if r.path[:lvl] in enh:
                r.anticipated_level = lvl
                d = r.level - lvl
                hist[d] = hist.get(d, 0) + 1
                break
        else:
            unmatched += 1
    return dict(sorted(hist.items())), unmatched


def run_comparison(
    g: ColoredGraph,
    heuristic: Heuristic | str = Heuristic.FIRST,
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
    timeout_ms: float | None = None,
) -> ComparisonReport:
    """Run both refinement modes with the same heuristic and compare their conflicts."""
    kw = dict(max_nodes=max_nodes, timeout_ms=timeout_ms, record_conflicts=True)
    _, base = search(g, RefineMode.BASELINE, heuristic, **kw)
    _, enh = search(g, RefineMode.ENHANCED, heuristic, **kw)
    hist, unmatched = conflict_depths(base.conflict_records, enh.conflict_records)
    return ComparisonReport(base, enh, hist, unmatched, base.complete and enh.complete)
