"""First-improvement descent over the swap-edge and swap-vertex neighbourhoods."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from .instance import Instance
from .tree import (
    CutIndex,
    SpanningTree,
    apply_swap_edge,
    apply_swap_vertex,
    cycle_path,
    edge_swap_table,
    gain_swap_edge,
    gamma,
    vertex_swap_table,
)

__all__ = ["DescentStats", "fast_discard", "descent"]

# candidates are evaluated in blocks of growing size so that an early
# improving move does not pay for a full neighbourhood scan
_FIRST_BLOCK = 32


@dataclass
class DescentStats:
    """Counters accumulated over one or more descent calls.

    ``n1_candidate_edges`` counts entering edges reached in scan order and
    ``discarded_edges`` those among them rejected by the fast examination.
    """

    iterations: int = 0
    n1_candidate_edges: int = 0
    discarded_edges: int = 0
    edge_moves: int = 0
    vertex_moves: int = 0

    @property
    def discard_ratio(self) -> float:
        return self.discarded_edges / self.n1_candidate_edges if self.n1_candidate_edges else 0.0

    def merge(self, other: "DescentStats") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))


def fast_discard(d_e: int, gamma: int, lam: int) -> bool:
    """True when no swap-edge move inserting an edge of contribution ``d_e`` can improve."""
    return d_e - gamma - lam >= 0


def _first_improving_leaving(inst, tree, d, e):
    for f in cycle_path(inst, tree, e):
        if gain_swap_edge(inst, d, e, f) < 0:
            return f
    raise AssertionError("entering edge flagged improving but no leaving edge improves")


def descent(
    inst: Instance,
    tree: SpanningTree,
    d: np.ndarray,
    rng: np.random.Generator,
    stats: DescentStats | None = None,
    *,
    fast_examination: bool = True,
    observer: Callable[[SpanningTree, np.ndarray, np.ndarray], None] | None = None,
    should_stop: Callable[[], bool] | None = None,
) -> DescentStats:
    """Apply first-improving moves of N1 and N2 until none remains.

    Each iteration shuffles the entering edges of N1 and the legal leaf
    pairs of N2 into one scan order and applies the first candidate with a
    strictly negative gain.  Entering edges passing :func:`fast_discard`
    are skipped without evaluating their cycle.

    ``observer(tree, d, discarded)`` is called once per iteration, before the
    move is applied, with the entering edges discarded in that iteration.
    ``should_stop`` is polled before each iteration.
    """
    stats = DescentStats() if stats is None else stats
    lam = inst.lambda_max
    while should_stop is None or not should_stop():
        stats.iterations += 1
        g = gamma(tree, d)
        nontree = np.flatnonzero(~tree.in_tree)
        vi, vj, *_, vgain = vertex_swap_table(inst, tree, d)
        n_edges = len(nontree)
        total = n_edges + len(vi)
        if total == 0:
            break
        order = rng.permutation(total)
        cut = None
        start, size = 0, _FIRST_BLOCK
        chosen = None
        examined_n1 = 0
        discarded = []
        while start < total:
            block = order[start:start + size]
            is_edge = block < n_edges
            improving = np.zeros(len(block), dtype=bool)
            skip = np.zeros(len(block), dtype=bool)

            entering = nontree[block[is_edge]]
            if len(entering):
                if fast_examination:
                    drop = d[entering] - g - lam >= 0
                else:
                    drop = np.zeros(len(entering), dtype=bool)
                skip[is_edge] = drop
                live = entering[~drop]
                if len(live):
                    cut = cut or CutIndex(inst, tree)
                    _, gains, legal = edge_swap_table(inst, tree, d, live, cut)
                    hits = (legal & (gains < 0)).any(axis=0)
                    pos = np.flatnonzero(is_edge)[~drop]
                    improving[pos] = hits
            pairs = block[~is_edge] - n_edges
            if len(pairs):
                improving[~is_edge] = vgain[pairs] < 0

            hit = np.flatnonzero(improving)
            stop_at = hit[0] + 1 if len(hit) else len(block)
            seen_edge = is_edge[:stop_at]
            examined_n1 += int(seen_edge.sum())
            discarded.append(nontree[block[:stop_at][seen_edge & skip[:stop_at]]])
            if len(hit):
                chosen = int(block[hit[0]])
                break
            start += size
            size *= 2

        dropped = np.concatenate(discarded) if discarded else np.empty(0, dtype=np.int64)
        stats.n1_candidate_edges += examined_n1
        stats.discarded_edges += len(dropped)
        if observer is not None:
            observer(tree, d, dropped)
        if chosen is None:
            break
        if chosen < n_edges:
            e = int(nontree[chosen])
            apply_swap_edge(inst, tree, d, e, _first_improving_leaving(inst, tree, d, e))
            stats.edge_moves += 1
        else:
            k = chosen - n_edges
            apply_swap_vertex(inst, tree, d, int(vi[k]), int(vj[k]))
            stats.vertex_moves += 1
    return stats
