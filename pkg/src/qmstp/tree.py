"""Rooted spanning-tree state with incremental objective and contribution vector.

A solution is stored as a parent vector rooted at vertex 0, together with
edge membership flags, vertex degrees, depths and the cached objective.  The
contribution vector ``d`` (``d[g] = c[g] + sum_{h in X} s[g, h]``) is a plain
int64 array kept alongside the tree; every move updates both in place.
"""

from __future__ import annotations

from collections import deque
from typing import Iterable

import numpy as np

from .instance import Instance

__all__ = [
    "SpanningTree",
    "random_spanning_tree",
    "objective",
    "build_contributions",
    "cycle_path",
    "gain_swap_edge",
    "apply_swap_edge",
    "degree_one_vertices",
    "swap_vertex_edges",
    "gain_swap_vertex",
    "apply_swap_vertex",
    "gamma",
    "edge_swap_table",
    "vertex_swap_table",
    "check_state",
]


class SpanningTree:
    """Feasible spanning tree rooted at vertex 0.

    Attributes:
        parent: parent vertex of each vertex, ``-1`` for the root.
        parent_edge: index of the edge to the parent, ``-1`` for the root.
        depth: distance to the root.
        in_tree: edge membership flags (length ``m``).
        degree: tree degree of each vertex.
        adj: tree neighbours of each vertex.
        objective: cached objective value.
    """

    def __init__(self, inst: Instance, edge_ids: Iterable[int]):
        n = inst.n
        edge_ids = [int(e) for e in edge_ids]
        if len(edge_ids) != n - 1:
            raise ValueError(f"a spanning tree needs {n - 1} edges, got {len(edge_ids)}")
        self.in_tree = np.zeros(inst.m, dtype=bool)
        self.in_tree[edge_ids] = True
        self.adj: list[set[int]] = [set() for _ in range(n)]
        for e in edge_ids:
            u, v = inst.edges[e]
            self.adj[u].add(int(v))
            self.adj[v].add(int(u))
        self.degree = np.array([len(a) for a in self.adj], dtype=np.int64)
        self.parent = np.full(n, -1, dtype=np.int64)
        self.parent_edge = np.full(n, -1, dtype=np.int64)
        self.depth = np.full(n, -1, dtype=np.int64)
        self.depth[0] = 0
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.adj[u]:
                if self.depth[v] < 0:
                    self.depth[v] = self.depth[u] + 1
                    self.parent[v] = u
                    self.parent_edge[v] = inst.edge_index[u, v]
                    queue.append(v)
        if (self.depth < 0).any():
            raise ValueError("edge set does not span the graph")
        self.objective = objective(inst, self)

    @property
    def n(self) -> int:
        return len(self.parent)

    def edge_ids(self) -> np.ndarray:
        return np.flatnonzero(self.in_tree)

    def copy(self) -> "SpanningTree":
        new = object.__new__(SpanningTree)
        new.in_tree = self.in_tree.copy()
        new.adj = [set(a) for a in self.adj]
        new.degree = self.degree.copy()
        new.parent = self.parent.copy()
        new.parent_edge = self.parent_edge.copy()
        new.depth = self.depth.copy()
        new.objective = self.objective
        return new

    def to_text(self) -> str:
        """``TREE <n> <F>`` followed by ``<child> <parent>`` lines, 1-based."""
        lines = [f"TREE {self.n} {self.objective}"]
        lines += [f"{v + 1} {self.parent[v] + 1}" for v in range(1, self.n)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, inst: Instance, text: str) -> "SpanningTree":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0][0] != "TREE":
            raise ValueError("expected 'TREE <n> <F>' header")
        edges = [inst.edge_index[int(a) - 1, int(b) - 1] for a, b in rows[1:]]
        if min(edges, default=0) < 0:
            raise ValueError("tree uses an edge missing from the instance")
        return cls(inst, edges)

    def __eq__(self, other):
        if not isinstance(other, SpanningTree):
            return NotImplemented
        return (
            np.array_equal(self.parent, other.parent)
            and np.array_equal(self.in_tree, other.in_tree)
            and np.array_equal(self.depth, other.depth)
            and np.array_equal(self.degree, other.degree)
            and self.objective == other.objective
        )

    __hash__ = None


def random_spanning_tree(inst: Instance, rng: np.random.Generator) -> SpanningTree:
    """Add uniformly drawn edges that join two components until the tree spans."""
    root = list(range(inst.n))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    # Drawing with replacement and skipping rejected edges visits edges in a
    # uniformly random order, so a permutation is equivalent.
    chosen = []
    for e in rng.permutation(inst.m).tolist():
        ru, rv = find(int(inst.edges[e, 0])), find(int(inst.edges[e, 1]))
        if ru != rv:
            root[ru] = rv
            chosen.append(e)
            if len(chosen) == inst.n - 1:
                break
    return SpanningTree(inst, chosen)


def objective(inst: Instance, tree: SpanningTree) -> int:
    """From-scratch objective: linear costs plus ``s`` over unordered tree-edge pairs."""
    x = tree.edge_ids()
    quad = inst.s[np.ix_(x, x)].sum(dtype=np.int64) // 2
    return int(inst.c[x].sum(dtype=np.int64) + quad)


def build_contributions(inst: Instance, tree: SpanningTree) -> np.ndarray:
    x = tree.edge_ids()
    return inst.c.astype(np.int64) + inst.s[:, x].sum(axis=1, dtype=np.int64)


def cycle_path(inst: Instance, tree: SpanningTree, e: int) -> list[int]:
    """Tree edges on the path between the endpoints of non-tree edge ``e``.

    Edges are listed from the first endpoint up to the meeting vertex, then
    from the meeting vertex down to the second endpoint.
    """
    if tree.in_tree[e]:
        raise ValueError(f"edge {e} is already in the tree")
    u, v = (int(x) for x in inst.edges[e])
    up, down = [], []
    parent, pedge, depth = tree.parent, tree.parent_edge, tree.depth
    while depth[u] > depth[v]:
        up.append(int(pedge[u]))
        u = parent[u]
    while depth[v] > depth[u]:
        down.append(int(pedge[v]))
        v = parent[v]
    while u != v:
        up.append(int(pedge[u]))
        down.append(int(pedge[v]))
        u, v = parent[u], parent[v]
    return up + down[::-1]


def gain_swap_edge(inst: Instance, d: np.ndarray, e: int, f: int) -> int:
    """Objective change of inserting ``e`` and removing ``f``."""
    return int(d[e] - d[f] - inst.s[e, f])


def _in_subtree(tree: SpanningTree, x: int, top: int) -> bool:
    depth, parent = tree.depth, tree.parent
    while depth[x] > depth[top]:
        x = parent[x]
    return x == top


def _rewire(inst: Instance, tree: SpanningTree, e: int, f: int) -> None:
    """Structural part of a swap: toggle edges and re-hang the detached subtree."""
    a, b = (int(x) for x in inst.edges[f])
    child = a if tree.parent[a] == b else b
    if tree.parent[child] != (b if child == a else a):
        raise ValueError(f"edge {f} is not a tree edge")
    x, y = (int(t) for t in inst.edges[e])
    x_in, y_in = _in_subtree(tree, x, child), _in_subtree(tree, y, child)
    if x_in == y_in:
        raise ValueError(f"edge {e} does not reconnect the cut of edge {f}")
    if y_in:
        x, y = y, x

    tree.adj[a].discard(b)
    tree.adj[b].discard(a)
    tree.adj[x].add(y)
    tree.adj[y].add(x)
    tree.in_tree[f] = False
    tree.in_tree[e] = True
    tree.degree[a] -= 1
    tree.degree[b] -= 1
    tree.degree[x] += 1
    tree.degree[y] += 1

    # reverse the parent chain from x up to the cut
    v, new_par, new_edge = x, y, e
    while True:
        old_par, old_edge = int(tree.parent[v]), int(tree.parent_edge[v])
        tree.parent[v] = new_par
        tree.parent_edge[v] = new_edge
        if v == child:
            break
        new_par, new_edge, v = v, old_edge, old_par

    tree.depth[x] = tree.depth[y] + 1
    stack = [x]
    while stack:
        u = stack.pop()
        for w in tree.adj[u]:
            if w != tree.parent[u]:
                tree.depth[w] = tree.depth[u] + 1
                stack.append(w)


def apply_swap_edge(inst: Instance, tree: SpanningTree, d: np.ndarray, e: int, f: int) -> int:
    """Insert ``e``, remove ``f``; updates tree, ``d`` and objective.  Returns the gain."""
    delta = gain_swap_edge(inst, d, e, f)
    _rewire(inst, tree, e, f)
    tree.objective += delta
    # s is symmetric, rows are contiguous
    d += inst.s[e]
    d -= inst.s[f]
    return delta


def degree_one_vertices(tree: SpanningTree) -> list[tuple[int, int]]:
    """``(vertex, neighbour)`` for each tree vertex of degree one, root included."""
    return [(int(v), next(iter(tree.adj[v]))) for v in np.flatnonzero(tree.degree == 1)]


def swap_vertex_edges(inst: Instance, tree: SpanningTree, i: int, j: int) -> tuple[int, int, int, int]:
    """Edges ``(e1, e2, f1, f2)`` = ``({i,r_j}, {j,r_i}, {i,r_i}, {j,r_j})`` of a legal vertex swap."""
    if tree.degree[i] != 1 or tree.degree[j] != 1:
        raise ValueError("swap-vertex needs two degree-one vertices")
    ri, rj = next(iter(tree.adj[i])), next(iter(tree.adj[j]))
    if ri == rj:
        raise ValueError("vertices share their neighbour")
    e1, e2 = int(inst.edge_index[i, rj]), int(inst.edge_index[j, ri])
    if e1 < 0 or e2 < 0:
        raise ValueError("replacement edge missing from the graph")
    f1, f2 = int(inst.edge_index[i, ri]), int(inst.edge_index[j, rj])
    assert len({e1, e2, f1, f2}) == 4, "swap-vertex edges must be pairwise distinct"
    return e1, e2, f1, f2


def _vertex_gain(s, d, e1, e2, f1, f2):
    return (d[e1] + d[e2] - d[f1] - d[f2] + s[e1, e2] + s[f1, f2]
            - s[e1, f1] - s[e1, f2] - s[e2, f1] - s[e2, f2])


def gain_swap_vertex(inst: Instance, tree: SpanningTree, d: np.ndarray, i: int, j: int) -> int:
    e1, e2, f1, f2 = swap_vertex_edges(inst, tree, i, j)
    return int(_vertex_gain(inst.s, d, e1, e2, f1, f2))


def apply_swap_vertex(inst: Instance, tree: SpanningTree, d: np.ndarray, i: int, j: int) -> int:
    """Exchange leaves ``i`` and ``j``; updates tree, ``d`` and objective.  Returns the gain."""
    e1, e2, f1, f2 = swap_vertex_edges(inst, tree, i, j)
    delta = int(_vertex_gain(inst.s, d, e1, e2, f1, f2))
    _rewire(inst, tree, e1, f1)
    _rewire(inst, tree, e2, f2)
    tree.objective += delta
    s = inst.s
    d += s[e1]
    d += s[e2]
    d -= s[f1]
    d -= s[f2]
    return delta


def gamma(tree: SpanningTree, d: np.ndarray) -> int:
    """Largest contribution among tree edges."""
    return int(d[tree.in_tree].max())


# ----------------------------------------------------------- vectorized scans


def _euler_intervals(tree: SpanningTree) -> tuple[np.ndarray, np.ndarray]:
    n = tree.n
    tin = np.empty(n, dtype=np.int64)
    tout = np.empty(n, dtype=np.int64)
    clock = 0
    stack = [(0, False)]
    parent = tree.parent
    while stack:
        v, done = stack.pop()
        if done:
            tout[v] = clock
            continue
        tin[v] = clock
        clock += 1
        stack.append((v, True))
        for w in tree.adj[v]:
            if w != parent[v]:
                stack.append((w, False))
    return tin, tout


class CutIndex:
    """Subtree intervals of a tree snapshot, answering "does edge e cross the cut of f"."""

    def __init__(self, inst: Instance, tree: SpanningTree):
        self.tin, self.tout = _euler_intervals(tree)
        self.children = np.flatnonzero(tree.parent >= 0)
        self.leaving = tree.parent_edge[self.children]
        self.inst = inst

    def crossing(self, entering: np.ndarray) -> np.ndarray:
        """Boolean ``(n-1, len(entering))``: row r is the cut of tree edge ``leaving[r]``."""
        ends = self.inst.edges[entering]
        lo = self.tin[self.children][:, None]
        hi = self.tout[self.children][:, None]
        tu = self.tin[ends[:, 0]][None, :]
        tv = self.tin[ends[:, 1]][None, :]
        return ((lo <= tu) & (tu < hi)) ^ ((lo <= tv) & (tv < hi))


def edge_swap_table(inst: Instance, tree: SpanningTree, d: np.ndarray, entering: np.ndarray,
                    cut: CutIndex | None = None):
    """Gains of every legal swap-edge move for the given entering edges.

    Returns ``(leaving, gains, legal)`` where ``gains[r, k]`` is the gain of
    inserting ``entering[k]`` and removing ``leaving[r]``; it is meaningful
    only where ``legal[r, k]`` holds.
    """
    cut = cut or CutIndex(inst, tree)
    entering = np.asarray(entering, dtype=np.int64)
    legal = cut.crossing(entering)
    gains = (d[entering][None, :] - d[cut.leaving][:, None]
             - inst.s[np.ix_(cut.leaving, entering)])
    return cut.leaving, gains, legal


def vertex_swap_table(inst: Instance, tree: SpanningTree, d: np.ndarray):
    """Every legal swap-vertex move as arrays ``(i, j, e1, e2, f1, f2, gain)`` with ``i < j``."""
    leaves = np.flatnonzero(tree.degree == 1)
    if len(leaves) < 2:
        empty = np.empty(0, dtype=np.int64)
        return (empty,) * 7
    rel = np.array([next(iter(tree.adj[v])) for v in leaves], dtype=np.int64)
    a, b = np.triu_indices(len(leaves), k=1)
    i, j, ri, rj = leaves[a], leaves[b], rel[a], rel[b]
    e1 = inst.edge_index[i, rj]
    e2 = inst.edge_index[j, ri]
    ok = (ri != rj) & (e1 >= 0) & (e2 >= 0)
    i, j, ri, rj, e1, e2 = i[ok], j[ok], ri[ok], rj[ok], e1[ok], e2[ok]
    f1 = inst.edge_index[i, ri]
    f2 = inst.edge_index[j, rj]
    gain = _vertex_gain(inst.s, d, e1, e2, f1, f2).astype(np.int64)
    return i, j, e1, e2, f1, f2, gain


def check_state(inst: Instance, tree: SpanningTree, d: np.ndarray | None = None) -> list[str]:
    """List every violated invariant of ``tree`` (and of ``d`` when given)."""
    problems = []
    n = inst.n
    if tree.in_tree.sum() != n - 1:
        problems.append(f"{tree.in_tree.sum()} tree edges, expected {n - 1}")
    if tree.parent[0] != -1:
        problems.append("root has a parent")
    for v in range(1, n):
        u, steps = v, 0
        while u != 0 and steps < n:
            u, steps = tree.parent[u], steps + 1
        if u != 0:
            problems.append(f"vertex {v} does not reach the root")
            continue
        e = inst.edge_index[v, tree.parent[v]]
        if e < 0 or e != tree.parent_edge[v] or not tree.in_tree[e]:
            problems.append(f"parent edge of vertex {v} is not a tree edge")
        if tree.depth[v] != tree.depth[tree.parent[v]] + 1:
            problems.append(f"depth of vertex {v} is stale")
    x = tree.edge_ids()
    counts = np.bincount(inst.edges[x].ravel(), minlength=n)
    if not np.array_equal(counts, tree.degree):
        problems.append("degree array disagrees with tree edges")
    if tree.objective != objective(inst, tree):
        problems.append("cached objective is stale")
    if d is not None and not np.array_equal(d, build_contributions(inst, tree)):
        problems.append("contribution vector is stale")
    return problems
