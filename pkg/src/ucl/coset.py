"""Budgeted coset enumeration for finitely presented groups.

Schreier-graph style enumeration with a union-find over coset labels:
subgroup generators are closed at the base vertex, then every live
vertex is scanned against every relator, unifying the endpoint of the
relator path with the start.  Enumeration over the trivial subgroup
yields the regular action, which decides the word problem exactly when
it completes within budget.

Words are tuples of nonzero ints: g > 0 is generator g-1, g < 0 its
inverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

__all__ = ["CosetTable", "coset_enumeration", "word_inverse", "free_reduce"]

_SENTINEL = -1


def word_inverse(word: Sequence[int]):
    return tuple(-g for g in reversed(word))


def free_reduce(word: Sequence[int]):
    out = []
    for g in word:
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


def _letter(g: int) -> int:
    # generator g>0 -> even slot, inverse -> odd slot
    return 2 * (g - 1) if g > 0 else 2 * (-g - 1) + 1


class _Graph:
    def __init__(self, nletters: int):
        self.nletters = nletters
        self.labels = []
        self.neighbors = []
        self.add_vertex()

    def add_vertex(self) -> int:
        c = len(self.labels)
        self.labels.append(c)
        self.neighbors.append([_SENTINEL] * self.nletters)
        return c

    def find(self, c: int) -> int:
        labels = self.labels
        root = c
        while labels[root] != root:
            root = labels[root]
        while labels[c] != root:
            labels[c], c = root, labels[c]
        return root

    def unify(self, c1: int, c2: int):
        stack = [(c1, c2)]
        while stack:
            a, b = stack.pop()
            a, b = self.find(a), self.find(b)
            if a == b:
                continue
            a, b = min(a, b), max(a, b)
            self.labels[b] = a
            na, nb = self.neighbors[a], self.neighbors[b]
            for d in range(self.nletters):
                if na[d] == _SENTINEL:
                    na[d] = nb[d]
                elif nb[d] != _SENTINEL:
                    stack.append((na[d], nb[d]))

    def step(self, c: int, d: int) -> int:
        c = self.find(c)
        ns = self.neighbors[c]
        if ns[d] == _SENTINEL:
            ns[d] = self.add_vertex()
        return self.find(ns[d])

    def follow(self, c: int, word) -> int:
        for g in word:
            c = self.step(c, _letter(g))
        return c


@dataclass(frozen=True)
class CosetTable:
    """Complete regular action of the group on cosets of the subgroup."""

    ngens: int
    table: tuple  # table[c] is a tuple of 2*ngens coset indices

    @property
    def size(self) -> int:
        return len(self.table)

    def follow(self, c: int, word: Sequence[int]) -> int:
        for g in word:
            c = self.table[c][_letter(g)]
        return c

    def word_is_identity(self, word: Sequence[int]) -> bool:
        """Exact for enumerations over the trivial subgroup."""
        return self.follow(0, word) == 0


def coset_enumeration(
    ngens: int,
    relators: Iterable[Sequence[int]],
    subgroup: Iterable[Sequence[int]] = (),
    max_cosets: int = 100_000,
) -> Optional[CosetTable]:
    """Enumerate cosets; None when the budget is exhausted."""
    rels = [free_reduce(r) for r in relators]
    rels += [(g, -g) for g in range(1, ngens + 1)]
    rels += [(-g, g) for g in range(1, ngens + 1)]
    graph = _Graph(2 * ngens)
    for w in subgroup:
        graph.unify(graph.follow(0, free_reduce(w)), 0)
        if len(graph.labels) > max_cosets:
            return None
    scan = 0
    while scan < len(graph.labels):
        if graph.find(scan) == scan:
            for rel in rels:
                graph.unify(graph.follow(scan, rel), scan)
                if len(graph.labels) > max_cosets:
                    return None
        scan += 1
    live = [c for c in range(len(graph.labels)) if graph.find(c) == c]
    dense = {c: i for i, c in enumerate(live)}
    rows = []
    for c in live:
        row = []
        for d in range(2 * ngens):
            t = graph.neighbors[c][d]
            if t == _SENTINEL:
                # unreachable for a completed scan, but keep it total
                t = c
            row.append(dense[graph.find(t)])
        rows.append(tuple(row))
    start = dense[graph.find(0)]
    if start != 0:
        # relabel so the subgroup coset is 0
        perm = {start: 0, 0: start}
        order = [perm.get(i, i) for i in range(len(rows))]
        inv = {v: k for k, v in enumerate(order)}
        rows = [tuple(inv[rows[order[i]][d]] for d in range(2 * ngens)) for i in range(len(rows))]
    return CosetTable(ngens, tuple(rows))
