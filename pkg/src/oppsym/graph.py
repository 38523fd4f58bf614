"""Colored simple graphs, permutations, and the two input formats.

The native format is whitespace-delimited text::

    n m k
    c_0 c_1 ... c_{n-1}
    u v          (m lines, 0 <= u < v < n)

DIMACS CNF input is converted to a two-colored literal/clause graph by
:func:`parse_cnf_to_graph`.
"""
from __future__ import annotations

import re
import sys
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence


class GraphFormatError(ValueError):
    """Malformed graph or CNF input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=True)
class ColoredGraph:
    """Immutable undirected simple graph on vertices ``0..n-1`` with vertex colors."""

    n: int
    adj: tuple[tuple[int, ...], ...]
    color: tuple[int, ...]
    k: int

    @property
    def m(self) -> int:
        return sum(len(a) for a in self.adj) // 2

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        colors: Sequence[int] | None = None,
    ) -> "ColoredGraph":
        """Build a graph, validating vertex ids, loops, duplicates and color density."""
        if n < 0:
            raise ValueError("negative vertex count")
        nbrs: list[list[int]] = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            nbrs[u].append(v)
            nbrs[v].append(u)
        if colors is None:
            colors = [0] * n
        colors = tuple(int(c) for c in colors)
        if len(colors) != n:
            raise ValueError("color list length differs from n")
        k = _check_colors(colors)
        return cls(n, tuple(tuple(sorted(a)) for a in nbrs), colors, k)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]

    def has_edge(self, u: int, v: int) -> bool:
        a = self.adj[u]
        i = bisect_left(a, v)
        return i < len(a) and a[i] == v

    def degree(self, v: int) -> int:
        return len(self.adj[v])


def _check_colors(colors: Sequence[int]) -> int:
    if not colors:
        return 0
    k = max(colors) + 1
    if min(colors) < 0:
        raise ValueError("negative color id")
    present = set(colors)
    if len(present) != k:
        missing = sorted(set(range(k)) - present)
        raise ValueError(f"color ids must be dense 0..{k - 1}; missing {missing}")
    return k


class Permutation:
    """A bijection on ``0..n-1``.

    Stored sparsely as the map of moved points, so that generators of
    large sparse graphs stay proportional to their support.  ``image`` gives
    the full array form.
    """

    __slots__ = ("n", "_moved", "_image")

    def __init__(self, n: int, moved: Mapping[int, int] | None = None):
        self.n = n
        self._moved = {u: v for u, v in (moved or {}).items() if u != v}
        self._image: tuple[int, ...] | None = None
        if sorted(self._moved) != sorted(self._moved.values()):
            raise ValueError("not a bijection")
        for u in self._moved:
            if not 0 <= u < n:
                raise ValueError(f"point {u} out of range for n={n}")

    @classmethod
    def from_image(cls, image: Sequence[int]) -> "Permutation":
        image = tuple(image)
        if sorted(image) != list(range(len(image))):
            raise ValueError("not a permutation")
        p = cls(len(image), {i: v for i, v in enumerate(image) if i != v})
        p._image = image
        return p

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(n)

    @classmethod
    def from_cycles(cls, text: str, n: int) -> "Permutation":
        """Parse cycle notation such as ``(0 2 1)(3 4)``; ``()`` is the identity."""
        moved: dict[int, int] = {}
        body = text.strip()
        if re.fullmatch(r"(\s*\([\d\s,]*\))*\s*", body) is None:
            raise ValueError(f"bad cycle notation: {text!r}")
        for cyc in re.findall(r"\(([^)]*)\)", body):
            pts = [int(x) for x in re.split(r"[\s,]+", cyc.strip()) if x]
            for i, u in enumerate(pts):
                if u in moved:
                    raise ValueError(f"point {u} repeated")
                moved[u] = pts[(i + 1) % len(pts)]
        return cls(n, moved)

    def __call__(self, v: int) -> int:
        return self._moved.get(v, v)

    @property
    def image(self) -> tuple[int, ...]:
        if self._image is None:
            img = list(range(self.n))
            for u, v in self._moved.items():
                img[u] = v
            self._image = tuple(img)
        return self._image

    @property
    def support(self) -> list[int]:
        return sorted(self._moved)

    def moved_items(self):
        return self._moved.items()

    def is_identity(self) -> bool:
        return not self._moved

    def inverse(self) -> "Permutation":
        return Permutation(self.n, {v: u for u, v in self._moved.items()})

    def compose(self, other: "Permutation") -> "Permutation":
        """``self ∘ other``: apply ``other`` first."""
        if other.n != self.n:
            raise ValueError("size mismatch")
        pts = set(self._moved) | set(other._moved)
        return Permutation(self.n, {u: self(other(u)) for u in pts})

    def cycles(self) -> list[tuple[int, ...]]:
        out = []
        seen = set()
        for start in sorted(self._moved):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            v = self._moved[start]
            while v != start:
                cyc.append(v)
                seen.add(v)
                v = self._moved[v]
            out.append(tuple(cyc))
        return out

    def __str__(self) -> str:
        cyc = self.cycles()
        if not cyc:
            return "()"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cyc)

    def __repr__(self) -> str:
        return f"Permutation({self.n}, {self})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and self.n == other.n and self._moved == other._moved

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._moved.items())))


# ---------------------------------------------------------------- parsing


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode()
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode() if isinstance(data, bytes) else data


def parse_graph(source) -> ColoredGraph:
    """Parse the native format from text, bytes or a file object."""
    lines = [
        (i + 1, ln.split()) for i, ln in enumerate(_read_text(source).splitlines())
    ]
    lines = [(no, toks) for no, toks in lines if toks]
    if not lines:
        raise GraphFormatError("empty input", 1)

    def ints(no, toks):
        try:
            return [int(t) for t in toks]
        except ValueError:
            raise GraphFormatError(f"non-integer token in {' '.join(toks)!r}", no) from None

    no, head = lines[0]
    head = ints(no, head)
    if len(head) != 3 or min(head) < 0:
        raise GraphFormatError("header must be 'n m k' with non-negative integers", no)
    n, m, k = head
    rest = lines[1:]
    if n > 0:
        if not rest:
            raise GraphFormatError("missing color line", no + 1)
        no, ctoks = rest[0]
        colors = ints(no, ctoks)
        if len(colors) != n:
            raise GraphFormatError(f"expected {n} colors, got {len(colors)}", no)
        for c in colors:
            if not 0 <= c < k:
                raise GraphFormatError(f"color {c} out of range 0..{k - 1}", no)
        if len(set(colors)) != k:
            raise GraphFormatError(f"colors must use every id in 0..{k - 1}", no)
        rest = rest[1:]
    else:
        colors = []
        if k != 0:
            raise GraphFormatError("empty graph must have k = 0", no)
    if len(rest) != m:
        where = rest[m][0] if len(rest) > m else (rest[-1][0] + 1 if rest else no + 1)
        raise GraphFormatError(f"expected {m} edge lines, got {len(rest)}", where)
    edges = []
    seen = set()
    for no, toks in rest:
        e = ints(no, toks)
        if len(e) != 2:
            raise GraphFormatError("edge line must have two vertices", no)
        u, v = e
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"vertex id out of range in edge {u} {v}", no)
        if u == v:
            raise GraphFormatError(f"self-loop at vertex {u}", no)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {key[0]} {key[1]}", no)
        seen.add(key)
        edges.append(key)
    return ColoredGraph.from_edges(n, edges, colors)


def format_graph(g: ColoredGraph) -> str:
    out = [f"{g.n} {g.m} {g.k}"]
    if g.n:
        out.append(" ".join(map(str, g.color)))
    out.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(out) + "\n"


def literal_vertex(lit: int) -> int:
    """Vertex id of a DIMACS literal: ``x_i -> 2(i-1)``, ``-x_i -> 2(i-1)+1``."""
    return 2 * (abs(lit) - 1) + (lit < 0)


def parse_cnf_to_graph(source, binary_shortcut: bool = False) -> ColoredGraph:
    """Build the literal/clause graph of a DIMACS CNF formula.

    Literal vertices get color 0 and are joined to their complements.
    Every clause becomes a color-1 vertex adjacent to its literals.  With
    ``binary_shortcut`` two-literal clauses are instead a direct literal
    edge; this is smaller but can admit permutations that swap a
    consistency edge with a clause edge.
    """
    num_vars = num_clauses = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for no, line in enumerate(_read_text(source).splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("c"):
            continue
        if s.startswith("%"):
            break
        if s.startswith("p"):
            toks = s.split()
            if num_vars is not None:
                raise GraphFormatError("duplicate problem line", no)
            if len(toks) != 4 or toks[1] != "cnf":
                raise GraphFormatError("problem line must be 'p cnf V C'", no)
            try:
                num_vars, num_clauses = int(toks[2]), int(toks[3])
            except ValueError:
                raise GraphFormatError("non-integer in problem line", no) from None
            if num_vars < 0 or num_clauses < 0:
                raise GraphFormatError("negative count in problem line", no)
            continue
        if num_vars is None:
            raise GraphFormatError("clause before problem line", no)
        for tok in s.split():
            try:
                lit = int(tok)
            except ValueError:
                raise GraphFormatError(f"bad literal {tok!r}", no) from None
            if lit == 0:
                clauses.append(current)
                current = []
            elif abs(lit) > num_vars:
                raise GraphFormatError(f"variable {abs(lit)} exceeds declared {num_vars}", no)
            else:
                current.append(lit)
    if num_vars is None:
        raise GraphFormatError("missing problem line")
    if current:
        clauses.append(current)
    if len(clauses) != num_clauses:
        raise GraphFormatError(f"declared {num_clauses} clauses, found {len(clauses)}")

    edges = {(2 * i, 2 * i + 1) for i in range(num_vars)}
    n = 2 * num_vars
    colors = [0] * n
    for clause in clauses:
        lits = sorted({literal_vertex(x) for x in clause})
        if binary_shortcut and len(lits) == 2:
            edges.add((lits[0], lits[1]))
            continue
        c = n
        n += 1
        colors.append(1)
        edges.update((x, c) for x in lits)
    return ColoredGraph.from_edges(n, sorted(edges), colors)


def read_input(path: str | None, cnf: bool = False) -> ColoredGraph:
    """Read a graph or CNF from ``path``; ``None`` or ``-`` means stdin."""
    if path in (None, "-"):
        text = sys.stdin.read()
    else:
        with open(path) as fh:
            text = fh.read()
    return parse_cnf_to_graph(text) if cnf else parse_graph(text)


# ---------------------------------------------------------------- permutations on graphs


def _check_size(g: ColoredGraph, a: Permutation) -> None:
    if a.n != g.n:
        raise ValueError(f"permutation on {a.n} points applied to graph with {g.n} vertices")


def apply_permutation(g: ColoredGraph, a: Permutation) -> ColoredGraph:
    """The permuted graph: vertex ``v`` of ``g`` becomes ``a(v)``."""
    _check_size(g, a)
    colors = [0] * g.n
    for v in range(g.n):
        colors[a(v)] = g.color[v]
    return ColoredGraph.from_edges(g.n, [(a(u), a(v)) for u, v in g.edges()], colors)


def is_automorphism(g: ColoredGraph, a: Permutation) -> bool:
    """True iff ``a`` preserves colors and the edge relation of ``g``.

    Only moved points are inspected: an edge with both ends fixed maps to itself.
    """
    _check_size(g, a)
    adj, color = g.adj, g.color
    for v, w in a.moved_items():
        if color[v] != color[w] or len(adj[v]) != len(adj[w]):
            return False
        target = adj[w]
        mapped = sorted(a(u) for u in adj[v])
        if tuple(mapped) != target:
            return False
    return True
