"""Exhaustive spanning-tree enumeration for small instances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .instance import Instance
from .tree import SpanningTree

__all__ = [
    "DEFAULT_TREE_BOUND",
    "TreeCountExceeded",
    "ExactResult",
    "kirchhoff_count",
    "enumerate_spanning_trees",
    "exact_optimum",
]

DEFAULT_TREE_BOUND = 10_000_000


class TreeCountExceeded(RuntimeError):
    def __init__(self, count: int, bound: int):
        self.count = count
        self.bound = bound
        super().__init__(
            f"instance has {count} spanning trees (matrix-tree theorem), "
            f"above the enumeration bound of {bound}"
        )


def _bareiss_det(a: list[list[int]]) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    a = [row[:] for row in a]
    size = len(a)
    if size == 0:
        return 1
    sign, prev = 1, 1
    for k in range(size - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, size) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        pivot = a[k][k]
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                a[i][j] = (a[i][j] * pivot - a[i][k] * a[k][j]) // prev
        prev = pivot
    return sign * a[-1][-1]


def kirchhoff_count(inst: Instance) -> int:
    """Number of spanning trees: any cofactor of the graph Laplacian."""
    n = inst.n
    lap = [[0] * n for _ in range(n)]
    for u, v in inst.edges.tolist():
        lap[u][v] -= 1
        lap[v][u] -= 1
        lap[u][u] += 1
        lap[v][v] += 1
    return _bareiss_det([row[1:] for row in lap[1:]])


def _connected(n: int, comp: list[int], edges: list[tuple[int, int]], start: int) -> bool:
    """Do the forest ``comp`` plus ``edges[start:]`` connect all vertices?"""
    label = {}
    root = list(range(n))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    # merge vertices already joined by the forest
    for v in range(n):
        c = comp[v]
        if c in label:
            root[find(v)] = find(label[c])
        else:
            label[c] = v
    pieces = len(label)
    for u, v in edges[start:]:
        ru, rv = find(u), find(v)
        if ru != rv:
            root[ru] = rv
            pieces -= 1
            if pieces == 1:
                return True
    return pieces == 1


def enumerate_spanning_trees(
    inst: Instance,
    visitor: Callable[[tuple[int, ...]], None],
    bound: int = DEFAULT_TREE_BOUND,
) -> int:
    """Call ``visitor`` once per spanning tree (sorted edge-index tuple); return the count.

    Edges are branched on in index order, inclusion first, so trees arrive
    in lexicographic order.  An edge is excluded only if the remaining
    edges still connect the graph, so every branch ends in a tree.
    """
    expected = kirchhoff_count(inst)
    if expected > bound:
        raise TreeCountExceeded(expected, bound)
    n, m = inst.n, inst.m
    edges = [tuple(e) for e in inst.edges.tolist()]
    count = 0

    def rec(k: int, chosen: list[int], comp: list[int]):
        nonlocal count
        if len(chosen) == n - 1:
            visitor(tuple(chosen))
            count += 1
            return
        u, v = edges[k]
        cu, cv = comp[u], comp[v]
        if cu != cv:
            merged = [cu if c == cv else c for c in comp]
            chosen.append(k)
            rec(k + 1, chosen, merged)
            chosen.pop()
        if m - k - 1 >= n - 1 - len(chosen) and _connected(n, comp, edges, k + 1):
            rec(k + 1, chosen, comp)

    rec(0, [], list(range(n)))
    return count


@dataclass(frozen=True)
class ExactResult:
    value: int
    edges: tuple[int, ...]
    count: int

    def tree(self, inst: Instance) -> SpanningTree:
        return SpanningTree(inst, self.edges)


def exact_optimum(inst: Instance, bound: int = DEFAULT_TREE_BOUND) -> ExactResult:
    """Minimum objective over all spanning trees; ties go to the lexicographically first tree."""
    c = inst.c.astype(np.int64)
    s = inst.s
    best = [None, None]

    def visit(x):
        idx = np.fromiter(x, dtype=np.int64, count=len(x))
        value = int(c[idx].sum() + s[np.ix_(idx, idx)].sum(dtype=np.int64) // 2)
        if best[0] is None or value < best[0]:
            best[0], best[1] = value, x

    count = enumerate_spanning_trees(inst, visit, bound)
    return ExactResult(best[0], best[1], count)
