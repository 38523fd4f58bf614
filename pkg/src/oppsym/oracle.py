"""Reference group computations: orbits, closure order, brute-force Aut(G).

Everything here is deliberately independent of the search code so it can
serve as an oracle in tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .graph import ColoredGraph, Permutation

ORACLE_BOUND = 10


class OrbitPartition:
    """Union-find over ``0..n-1`` with union by size and path halving."""

    def __init__(self, n: int):
        self.n = n
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, x: int, y: int) -> bool:
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        if self.size[x] < self.size[y]:
            x, y = y, x
        self.parent[y] = x
        self.size[x] += self.size[y]
        return True

    def add_generator(self, a: Permutation) -> None:
        for u, v in a.moved_items():
            self.union(u, v)

    def orbit_size(self, x: int) -> int:
        return self.size[self.find(x)]

    def representative(self, x: int) -> int:
        """Smallest vertex of x's orbit."""
        return min(self.orbit(x))

    def orbit(self, x: int) -> list[int]:
        r = self.find(x)
        return [v for v in range(self.n) if self.find(v) == r]

    def orbits(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for v in range(self.n):
            groups.setdefault(self.find(v), []).append(v)
        return sorted(groups.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, OrbitPartition) and self.orbits() == other.orbits()


def orbits_of(gens: Iterable[Permutation], n: int) -> OrbitPartition:
    uf = OrbitPartition(n)
    for a in gens:
        uf.add_generator(a)
    return uf


@dataclass
class GroupSummary:
    order: int
    orbits: list[list[int]]
    generator_count: int
    elements: list[tuple[int, ...]] | None = None


def _compose(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    # a after b
    return tuple(a[x] for x in b)


def group_closure(gens: Sequence[Permutation], n: int, bound: int = ORACLE_BOUND) -> set[tuple[int, ...]]:
    if n > bound:
        raise ValueError(f"closure refused for n={n} > {bound}")
    ident = tuple(range(n))
    imgs = [g.image for g in gens]
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for g in imgs:
                y = _compose(g, x)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return seen


def generated_group_order(gens: Sequence[Permutation], n: int, bound: int = ORACLE_BOUND) -> int:
    """|<gens>| by exhaustive closure."""
    return len(group_closure(gens, n, bound))


def brute_force_aut(g: ColoredGraph, bound: int = ORACLE_BOUND, prune: bool = True) -> GroupSummary:
    """All automorphisms of ``g`` by enumerating color-respecting bijections.

    With ``prune`` a partial map is abandoned as soon as it breaks an edge
    between already-mapped vertices; the result is the same set.
    """
    n = g.n
    if n > bound:
        raise ValueError(f"brute force refused for n={n} > {bound}")
    adjset = [set(a) for a in g.adj]
    by_color: dict[int, list[int]] = {}
    for v in range(n):
        by_color.setdefault(g.color[v], []).append(v)
    found: list[tuple[int, ...]] = []
    image = [-1] * n
    used = [False] * n

    def ok_full() -> bool:
        return all(
            (image[u] in adjset[image[v]]) == (u in adjset[v])
            for v in range(n)
            for u in range(v + 1, n)
        )

    def extend(v: int) -> None:
        if v == n:
            if prune or ok_full():
                found.append(tuple(image))
            return
        for w in by_color[g.color[v]]:
            if used[w]:
                continue
            if prune and any((image[u] in adjset[w]) != (u in adjset[v]) for u in range(v)):
                continue
            image[v] = w
            used[w] = True
            extend(v + 1)
            used[w] = False
        image[v] = -1

    extend(0)
    uf = OrbitPartition(n)
    for img in found:
        for v, w in enumerate(img):
            uf.union(v, w)
    return GroupSummary(len(found), uf.orbits(), len(found), found)
