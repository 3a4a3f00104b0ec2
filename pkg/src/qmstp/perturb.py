"""Tabu-driven directed perturbations and the random diversified perturbation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .instance import Instance
from .tree import (
    CutIndex,
    SpanningTree,
    apply_swap_edge,
    apply_swap_vertex,
    edge_swap_table,
    vertex_swap_table,
)

__all__ = [
    "NEVER",
    "TabuHistory",
    "MoveLog",
    "directed_perturb_edges",
    "directed_perturb_vertices",
    "diversified_perturb",
    "replay_tabu_log",
]

# last-touched value of an edge or vertex that was never moved
NEVER = -(1 << 40)


@dataclass
class TabuHistory:
    edge_last: np.ndarray
    vertex_last: np.ndarray
    move_counter: int = 0

    @classmethod
    def fresh(cls, inst: Instance) -> "TabuHistory":
        return cls(np.full(inst.m, NEVER, dtype=np.int64), np.full(inst.n, NEVER, dtype=np.int64))


@dataclass
class MoveLog:
    """Fallback counters plus, when ``entries`` is a list, one dict per directed move."""

    entries: list | None = None
    fallbacks: Counter = field(default_factory=Counter)

    def add(self, **entry):
        if self.entries is not None:
            self.entries.append(entry)


def _pick_min(gains: np.ndarray, mask: np.ndarray, rng: np.random.Generator) -> int:
    """Flat index of a uniformly chosen minimum-gain entry among ``mask``."""
    flat = np.flatnonzero(mask)
    vals = gains.ravel()[flat]
    ties = flat[vals == vals.min()]
    return int(ties[rng.integers(len(ties))]) if len(ties) > 1 else int(ties[0])


def _edge_step(inst, tree, d, hist, l_in, l_out, best, rng, log):
    nontree = np.flatnonzero(~tree.in_tree)
    if len(nontree) == 0:
        log.fallbacks["no_edge_move"] += 1
        return None
    leaving, gains, legal = edge_swap_table(inst, tree, d, nontree, CutIndex(inst, tree))
    t = hist.move_counter
    last_in = hist.edge_last[nontree]
    last_out = hist.edge_last[leaving]
    free = (t > last_out + l_out)[:, None] & (t > last_in + l_in)[None, :]
    aspire = tree.objective + gains < best
    admissible = legal & (free | aspire)
    fallback = not admissible.any()
    if fallback:
        log.fallbacks["edge_all_tabu"] += 1
        age = np.maximum(last_out[:, None], last_in[None, :])
        oldest = age[legal].min()
        admissible = legal & (age == oldest)
    k = _pick_min(gains, admissible, rng)
    r, col = divmod(k, len(nontree))
    e, f = int(nontree[col]), int(leaving[r])
    tabu, asp = not free[r, col], bool(aspire[r, col])
    delta = apply_swap_edge(inst, tree, d, e, f)
    hist.edge_last[e] = hist.edge_last[f] = t
    hist.move_counter += 1
    log.add(step=t, op="edge", e=e, f=f, delta=delta, objective=tree.objective, best=best,
            tenure=(l_in, l_out), tabu=tabu, aspiration=asp, fallback=fallback)
    return tree.objective


def directed_perturb_edges(
    inst: Instance,
    tree: SpanningTree,
    d: np.ndarray,
    hist: TabuHistory,
    l_in: int,
    l_out: int,
    strength: int,
    best_overall: float,
    rng: np.random.Generator,
    log: MoveLog | None = None,
    should_stop: Callable[[], bool] | None = None,
) -> int:
    """Apply ``strength`` best admissible swap-edge moves, improving or not.

    A move inserting ``e`` and removing ``f`` is tabu unless the move counter
    exceeds both ``I_e + l_in`` and ``I_f + l_out``; tabu moves are admitted
    only when they lead below ``best_overall``.  Returns the number of moves
    applied.
    """
    log = MoveLog() if log is None else log
    best, applied = best_overall, 0
    for _ in range(strength):
        if should_stop is not None and should_stop():
            break
        value = _edge_step(inst, tree, d, hist, l_in, l_out, best, rng, log)
        if value is None:
            break
        best = min(best, value)
        applied += 1
    return applied


def directed_perturb_vertices(
    inst: Instance,
    tree: SpanningTree,
    d: np.ndarray,
    hist: TabuHistory,
    l_swap: int,
    strength: int,
    best_overall: float,
    rng: np.random.Generator,
    log: MoveLog | None = None,
    should_stop: Callable[[], bool] | None = None,
    edge_tenures: tuple[int, int] = (1, 1),
) -> int:
    """Apply ``strength`` best admissible swap-vertex moves.

    When no legal leaf pair exists the step becomes one directed swap-edge
    step using ``edge_tenures``; such steps are counted in the log's
    fallbacks.  Returns the number of moves applied.
    """
    log = MoveLog() if log is None else log
    best, applied = best_overall, 0
    for _ in range(strength):
        if should_stop is not None and should_stop():
            break
        vi, vj, e1, e2, f1, f2, gains = vertex_swap_table(inst, tree, d)
        if len(vi) == 0:
            log.fallbacks["vertex_to_edge"] += 1
            value = _edge_step(inst, tree, d, hist, *edge_tenures, best, rng, log)
            if value is None:
                break
            best = min(best, value)
            applied += 1
            continue
        t = hist.move_counter
        last_i, last_j = hist.vertex_last[vi], hist.vertex_last[vj]
        free = (t > last_i + l_swap) & (t > last_j + l_swap)
        aspire = tree.objective + gains < best
        admissible = free | aspire
        fallback = not admissible.any()
        if fallback:
            log.fallbacks["vertex_all_tabu"] += 1
            age = np.maximum(last_i, last_j)
            admissible = age == age.min()
        k = _pick_min(gains, admissible, rng)
        i, j = int(vi[k]), int(vj[k])
        delta = apply_swap_vertex(inst, tree, d, i, j)
        hist.vertex_last[i] = hist.vertex_last[j] = t
        hist.move_counter += 1
        log.add(step=t, op="vertex", i=i, j=j, delta=delta, objective=tree.objective, best=best,
                tenure=(l_swap,), tabu=not free[k], aspiration=bool(aspire[k]), fallback=fallback)
        best = min(best, tree.objective)
        applied += 1
    return applied


def _detached_side(tree: SpanningTree, child: int) -> np.ndarray:
    side = np.zeros(tree.n, dtype=bool)
    side[child] = True
    stack = [child]
    parent = tree.parent
    while stack:
        u = stack.pop()
        for w in tree.adj[u]:
            if w != parent[u]:
                side[w] = True
                stack.append(w)
    return side


def diversified_perturb(
    inst: Instance,
    tree: SpanningTree,
    d: np.ndarray,
    strength: int,
    rng: np.random.Generator,
) -> int:
    """Remove a uniformly random tree edge, reconnect with the cheapest edge; repeat.

    "Cheapest" is the smallest contribution to the tree left after the
    removal, i.e. ``d[e] - s[e, f]``; the removed edge itself is eligible.
    Ties are broken uniformly.  Returns the number of steps performed.
    """
    for _ in range(strength):
        x = tree.edge_ids()
        f = int(x[rng.integers(len(x))])
        a, b = inst.edges[f]
        child = int(a) if tree.parent[a] == b else int(b)
        side = _detached_side(tree, child)
        cand = np.flatnonzero(side[inst.edges[:, 0]] ^ side[inst.edges[:, 1]])
        cost = d[cand] - inst.s[f, cand]
        ties = cand[cost == cost.min()]
        e = int(ties[rng.integers(len(ties))]) if len(ties) > 1 else int(ties[0])
        if e != f:
            apply_swap_edge(inst, tree, d, e, f)
    return strength


def replay_tabu_log(entries: list[dict]) -> list[str]:
    """Re-derive tabu status from a move log and report every unjustified move.

    Last-touched indices are rebuilt from the log alone.  A move is flagged
    when it was tabu without beating the aspiration level and was not a
    recorded fallback, or when the logged tabu flag disagrees with the
    replayed one.
    """
    edge_last: dict[int, int] = {}
    vertex_last: dict[int, int] = {}
    problems = []
    prev_step = None
    for entry in entries:
        t = entry["step"]
        if prev_step is not None and t <= prev_step:
            problems.append(f"step {t}: move counter did not advance")
        prev_step = t
        if entry["op"] == "edge":
            l_in, l_out = entry["tenure"]
            e, f = entry["e"], entry["f"]
            tabu = not (t > edge_last.get(e, NEVER) + l_in and t > edge_last.get(f, NEVER) + l_out)
            edge_last[e] = edge_last[f] = t
        else:
            (l_swap,) = entry["tenure"]
            i, j = entry["i"], entry["j"]
            tabu = not (t > vertex_last.get(i, NEVER) + l_swap and t > vertex_last.get(j, NEVER) + l_swap)
            vertex_last[i] = vertex_last[j] = t
        if tabu != entry["tabu"]:
            problems.append(f"step {t}: logged tabu flag {entry['tabu']} but replay gives {tabu}")
        if tabu and not entry["fallback"] and not entry["objective"] < entry["best"]:
            problems.append(f"step {t}: tabu move applied without aspiration")
    return problems
