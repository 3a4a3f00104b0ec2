"""Problem instances: storage, file format and benchmark-family generators.

Vertices are 0-based internally (vertex 0 is the tree root).  The text
format on disk is 1-based::

    QMSTP <n> <m>
    <u> <v> <c>            # m lines, edge index = line order, u < v
    <s_e0> ... <s_e(m-1)>  # m rows of the symmetric quadratic-sum matrix

Lines starting with ``#`` are ignored.  ``s[e, f]`` holds ``q_ef + q_fe``,
the only form in which the quadratic costs enter the objective.
"""

from __future__ import annotations

import heapq
import io
import math
import os
from pathlib import Path
from typing import IO, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import cdist

from ._rng import make_rng

__all__ = [
    "Instance",
    "InstanceError",
    "ParseError",
    "load_instance",
    "save_instance",
    "generate_uniform",
    "generate_euclidean",
    "generate_vsym",
    "generate_esym",
    "generate_family",
    "FAMILIES",
    "round_half_up",
]


class InstanceError(ValueError):
    """Raised when instance data violates a structural invariant."""


class ParseError(InstanceError):
    """Raised for malformed instance files; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def round_half_up(x):
    """Round to the nearest integer with ties going up (works on arrays)."""
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


class Instance:
    """Immutable QMSTP instance.

    Attributes:
        n: number of vertices.
        edges: ``(m, 2)`` int array of 0-based endpoints with ``u < v``.
        c: length-``m`` linear costs (int32).
        s: ``(m, m)`` symmetric quadratic-sum matrix (int32), zero diagonal.
        lambda_max: maximum off-diagonal entry of ``s`` (0 when ``m == 1``).
        edge_index: ``(n, n)`` lookup from an endpoint pair to the edge
            index, ``-1`` where there is no edge.
        incident: per-vertex arrays of incident edge indices.
        vertex_data: optional generator by-product (coordinates or vertex
            weights).  Not serialized and ignored by equality.
    """

    def __init__(self, n: int, edges, c, s, *, vertex_data: np.ndarray | None = None):
        n = int(n)
        edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        c = np.array(c)
        s = np.array(s)
        if c.dtype.kind not in "iu" or s.dtype.kind not in "iu":
            raise InstanceError("costs must be integers")
        m = len(edges)
        _validate(n, edges, c, s)

        self.n = n
        self.m = m
        self.edges = edges
        self.c = c.astype(np.int32, copy=False)
        self.s = s.astype(np.int32, copy=False)
        self.lambda_max = int(self.s.max()) if m else 0
        self.edge_index = np.full((n, n), -1, dtype=np.int64)
        self.edge_index[edges[:, 0], edges[:, 1]] = np.arange(m)
        self.edge_index[edges[:, 1], edges[:, 0]] = np.arange(m)
        order = np.argsort(np.concatenate([edges[:, 0], edges[:, 1]]), kind="stable")
        ends = np.concatenate([edges[:, 0], edges[:, 1]])[order]
        idx = np.concatenate([np.arange(m), np.arange(m)])[order]
        bounds = np.searchsorted(ends, np.arange(n + 1))
        self.incident = [idx[bounds[v]:bounds[v + 1]] for v in range(n)]
        self.vertex_data = vertex_data

        for arr in (self.edges, self.c, self.s, self.edge_index):
            arr.setflags(write=False)

    @property
    def density(self) -> float:
        return self.m / (self.n * (self.n - 1) / 2) if self.n > 1 else 1.0

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.s, other.s)
            and self.lambda_max == other.lambda_max
        )

    __hash__ = None

    def __repr__(self):
        return f"Instance(n={self.n}, m={self.m}, lambda_max={self.lambda_max})"

    def summary(self) -> dict:
        """Size and cost ranges, as printed by the ``generate`` subcommand."""
        off = self.s[~np.eye(self.m, dtype=bool)] if self.m > 1 else np.zeros(1, dtype=np.int32)
        return {
            "n": self.n,
            "m": self.m,
            "density": round(self.density, 6),
            "c_min": int(self.c.min()),
            "c_max": int(self.c.max()),
            "s_min": int(off.min()),
            "s_max": int(off.max()),
            "lambda_max": self.lambda_max,
        }


def _validate(n, edges, c, s):
    m = len(edges)
    if n < 2:
        raise InstanceError("need at least 2 vertices")
    if not n - 1 <= m <= n * (n - 1) // 2:
        raise InstanceError(f"edge count {m} outside [{n - 1}, {n * (n - 1) // 2}]")
    if c.shape != (m,):
        raise InstanceError(f"expected {m} linear costs, got shape {c.shape}")
    if s.shape != (m, m):
        raise InstanceError(f"expected ({m}, {m}) quadratic matrix, got shape {s.shape}")
    u, v = edges[:, 0], edges[:, 1]
    if (u < 0).any() or (v >= n).any():
        raise InstanceError("vertex label out of range")
    if (u == v).any():
        raise InstanceError("self-loop")
    if (u > v).any():
        raise InstanceError("edge endpoints must satisfy u < v")
    if len(np.unique(u * n + v)) != m:
        raise InstanceError("duplicate edge")
    if (c < 0).any() or (s < 0).any():
        raise InstanceError("negative cost")
    if not np.array_equal(s, s.T):
        raise InstanceError("asymmetric quadratic matrix")
    if np.diagonal(s).any():
        raise InstanceError("nonzero diagonal in quadratic matrix")
    if max(int(c.max()), int(s.max())) > np.iinfo(np.int32).max:
        raise InstanceError("cost exceeds 32-bit range")
    graph = coo_matrix((np.ones(m), (u, v)), shape=(n, n))
    if connected_components(graph, directed=False, return_labels=False) != 1:
        raise InstanceError("disconnected graph")


# --------------------------------------------------------------------- file io


def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_text()
    data = source.read()
    return data.decode() if isinstance(data, bytes) else data


def load_instance(source: str | os.PathLike | IO) -> Instance:
    """Parse an instance from a path or a (text or binary) readable stream."""
    lines = [
        (num, line.split())
        for num, line in enumerate(_read_text(source).splitlines(), start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise ParseError("empty file")
    num, head = lines[0]
    if len(head) != 3 or head[0] != "QMSTP":
        raise ParseError("expected header 'QMSTP <n> <m>'", num)
    try:
        n, m = int(head[1]), int(head[2])
    except ValueError:
        raise ParseError("non-integer n or m in header", num) from None
    if len(lines) != 1 + 2 * m:
        raise ParseError(f"expected {2 * m} data lines after header, found {len(lines) - 1}")

    edges = np.empty((m, 2), dtype=np.int64)
    c = np.empty(m, dtype=np.int64)
    for k in range(m):
        num, tok = lines[1 + k]
        if len(tok) != 3:
            raise ParseError("edge line must be '<u> <v> <c>'", num)
        try:
            u, v, cost = (int(t) for t in tok)
        except ValueError:
            raise ParseError("non-integer token in edge line", num) from None
        if not 1 <= u < v <= n:
            raise ParseError(f"edge ({u}, {v}) must satisfy 1 <= u < v <= {n}", num)
        edges[k] = (u - 1, v - 1)
        c[k] = cost

    s = np.empty((m, m), dtype=np.int64)
    for k in range(m):
        num, tok = lines[1 + m + k]
        if len(tok) != m:
            raise ParseError(f"matrix row needs {m} entries, found {len(tok)}", num)
        try:
            s[k] = np.array(tok, dtype=np.int64)
        except ValueError:
            raise ParseError("non-integer token in matrix row", num) from None
    return Instance(n, edges, c, s)


def _format(inst: Instance) -> str:
    out = io.StringIO()
    out.write(f"QMSTP {inst.n} {inst.m}\n")
    for (u, v), cost in zip(inst.edges.tolist(), inst.c.tolist()):
        out.write(f"{u + 1} {v + 1} {cost}\n")
    for row in inst.s.tolist():
        out.write(" ".join(map(str, row)))
        out.write("\n")
    return out.getvalue()


def save_instance(inst: Instance, sink: str | os.PathLike | IO) -> None:
    """Write ``inst`` in the canonical text format to a path or stream."""
    text = _format(inst)
    if isinstance(sink, (str, os.PathLike)):
        Path(sink).write_text(text)
    elif isinstance(sink, io.TextIOBase) or hasattr(sink, "encoding"):
        sink.write(text)
    else:
        sink.write(text.encode())


# ----------------------------------------------------------------- generators


def _check_range(name, rng_pair):
    lo, hi = (int(x) for x in rng_pair)
    if lo < 0 or hi < lo:
        raise ValueError(f"{name} must be a non-negative interval lo <= hi, got {rng_pair}")
    return lo, hi


def _random_tree_pairs(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Edges of a uniform random labelled tree on n vertices (Pruefer decoding)."""
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    pairs = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        pairs.append((min(leaf, x), max(leaf, x)))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    pairs.append((min(a, b), max(a, b)))
    return pairs


def _complete_edges(n: int) -> np.ndarray:
    u, v = np.triu_indices(n, k=1)
    return np.stack([u, v], axis=1)


def _pair_matrix(m: int, q_range, rng: np.random.Generator) -> np.ndarray:
    """Symmetric ``s`` with one draw per unordered pair, stored as ``2q``."""
    lo, hi = q_range
    q = rng.integers(lo, hi + 1, size=(m, m), dtype=np.int32)
    q = np.triu(q, k=1)
    return 2 * (q + q.T)


def generate_uniform(n: int, density: float, c_range: Sequence[int], q_range: Sequence[int],
                     seed: int) -> Instance:
    """Random graph with i.i.d. uniform integer linear and pairwise quadratic costs.

    Covers the CP, SYM, SS and RAND families.  For ``density < 1`` a uniform
    random spanning tree is placed first so that the graph is connected, and
    the remaining edges are sampled without replacement from the complement.
    """
    c_range = _check_range("c_range", c_range)
    q_range = _check_range("q_range", q_range)
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    total = n * (n - 1) // 2
    m = int(round_half_up(density * total))
    if m < n - 1:
        raise ValueError(f"density {density} gives {m} edges, fewer than the {n - 1} needed to connect")
    rng = make_rng(seed, "instance")

    if m == total:
        edges = _complete_edges(n)
    else:
        tree = _random_tree_pairs(n, rng)
        tree_codes = {u * n + v for u, v in tree}
        all_pairs = _complete_edges(n)
        codes = all_pairs[:, 0] * n + all_pairs[:, 1]
        rest = np.flatnonzero(~np.isin(codes, list(tree_codes)))
        extra = rng.choice(rest, size=m - (n - 1), replace=False)
        chosen = np.concatenate([np.array(sorted(tree_codes), dtype=np.int64), codes[extra]])
        chosen.sort()
        edges = np.stack([chosen // n, chosen % n], axis=1)

    c = rng.integers(c_range[0], c_range[1] + 1, size=m)
    s = _pair_matrix(m, q_range, rng)
    return Instance(n, edges, c, s)


def _euclidean_costs(points: np.ndarray, edges: np.ndarray) -> np.ndarray:
    diff = points[edges[:, 0]] - points[edges[:, 1]]
    return round_half_up(np.hypot(diff[:, 0], diff[:, 1]))


def generate_euclidean(n: int, side: float, q_range: Sequence[int], seed: int) -> Instance:
    """Complete graph on random points in a square, rounded distances as linear costs.

    Covers SCA (side 500, quadratic costs in [0, 20]) and SOAK (side 500,
    quadratic costs in [1, 20]).  ``vertex_data`` holds the coordinates.
    """
    q_range = _check_range("q_range", q_range)
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = make_rng(seed, "instance")
    points = rng.uniform(0.0, side, size=(n, 2))
    edges = _complete_edges(n)
    c = _euclidean_costs(points, edges)
    s = _pair_matrix(len(edges), q_range, rng)
    return Instance(n, edges, c, s, vertex_data=points)


def generate_vsym(n: int, seed: int, *, weights: Sequence[int] | None = None) -> Instance:
    """VSYM: linear costs in [1, 10000]; ``q_ef`` is the product of the four endpoint weights.

    Vertex weights are drawn in [1, 10] unless ``weights`` is given; either
    way they are kept in ``vertex_data``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = make_rng(seed, "instance")
    edges = _complete_edges(n)
    c = rng.integers(1, 10001, size=len(edges))
    w = rng.integers(1, 11, size=n) if weights is None else np.asarray(weights, dtype=np.int64)
    if w.shape != (n,):
        raise ValueError(f"need {n} vertex weights")
    pw = w[edges[:, 0]] * w[edges[:, 1]]
    s = 2 * np.outer(pw, pw)
    np.fill_diagonal(s, 0)
    return Instance(n, edges, c, s, vertex_data=w)


def generate_esym(n: int, side: float, seed: int) -> Instance:
    """ESYM: rounded endpoint distances as linear costs, rounded midpoint distances as ``q``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = make_rng(seed, "instance")
    points = rng.uniform(0.0, side, size=(n, 2))
    edges = _complete_edges(n)
    c = _euclidean_costs(points, edges)
    mid = (points[edges[:, 0]] + points[edges[:, 1]]) / 2
    q = round_half_up(cdist(mid, mid))
    np.fill_diagonal(q, 0)
    return Instance(n, edges, c, 2 * q, vertex_data=points)


FAMILIES = ("cp", "sym", "vsym", "esym", "sca", "ss", "rand", "soak")


def generate_family(family: str, n: int, seed: int, *, density: float | None = None,
                    cost_max: int | None = None) -> Instance:
    """Generate an instance from one of the named benchmark families.

    ``density`` applies to ``cp`` only (default 1.0); ``cost_max`` selects
    the CP cost interval [1, 10] or [1, 100] (default 100).
    """
    family = family.lower()
    if family == "cp":
        hi = 100 if cost_max is None else int(cost_max)
        return generate_uniform(n, 1.0 if density is None else density, (1, hi), (1, hi), seed)
    if family in ("sym", "ss", "rand"):
        return generate_uniform(n, 1.0, (1, 100), (1, 20), seed)
    if family == "vsym":
        return generate_vsym(n, seed)
    if family == "esym":
        return generate_esym(n, 100.0, seed)
    if family == "sca":
        return generate_euclidean(n, 500.0, (0, 20), seed)
    if family == "soak":
        return generate_euclidean(n, 500.0, (1, 20), seed)
    raise ValueError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")


def max_euclidean_cost(side: float) -> int:
    """Largest rounded distance possible inside a square of the given side."""
    return int(round_half_up(side * math.sqrt(2)))
