"""Three-phase search driver: descent, local-optima exploration, diversification."""

from __future__ import annotations

import math
import re
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

import numpy as np

from ._rng import make_rng
from .descent import DescentStats, descent
from .instance import Instance
from .perturb import (
    MoveLog,
    TabuHistory,
    directed_perturb_edges,
    directed_perturb_vertices,
    diversified_perturb,
)
from .tree import SpanningTree, build_contributions, random_spanning_tree

__all__ = [
    "TpsParams",
    "StopCriterion",
    "RunResult",
    "default_params",
    "apply_overrides",
    "explore_local_optima",
    "tps_run",
    "variant_run",
    "VARIANTS",
]

VARIANTS = ("v0", "v1", "v2")


@dataclass(frozen=True)
class TpsParams:
    """Search parameters; every range is an inclusive integer interval.

    Tenures and perturbation strengths are redrawn uniformly from their
    range at every operator call.
    """

    p: float = 1.0
    l_in: tuple[int, int] = (1, 3)
    l_out: tuple[int, int] = (1, 1)
    l_swap: tuple[int, int] = (1, 1)
    L_dir: tuple[int, int] = (1, 1)
    L_div: tuple[int, int] = (1, 1)
    omega_max: int = 5
    profile: str = "general"

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.omega_max < 1:
            raise ValueError("omega_max must be at least 1")
        for name in ("l_in", "l_out", "l_swap", "L_dir", "L_div"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"{name} must be a non-empty non-negative interval, got {(lo, hi)}")


def _scaled(coef, n: int) -> int:
    """Round-half-up of ``coef * n`` in exact arithmetic."""
    x = Fraction(str(coef)) * n
    return math.floor(x + Fraction(1, 2))


def _interval(lo: int, hi: int) -> tuple[int, int]:
    lo = max(lo, 0)
    return lo, max(hi, lo)


def default_params(profile: str, n: int) -> TpsParams:
    """Parameter presets: ``general`` for ordinary instances, ``qap`` for QAP-derived ones."""
    if n < 2:
        raise ValueError("n must be at least 2")
    base = TpsParams(
        p=1.0,
        l_in=(1, 3),
        l_out=_interval(_scaled("0.35", n), _scaled("0.45", n)),
        l_swap=_interval(n, 5 * n),
        L_dir=_interval(_scaled("0.5", n), n),
        L_div=_interval(_scaled("0.4", n), _scaled("0.6", n)),
        omega_max=5,
        profile="general",
    )
    if profile == "general":
        return base
    if profile == "qap":
        return replace(base, p=0.5, L_dir=_interval(5 * n, 10 * n), profile="qap")
    raise ValueError(f"unknown profile {profile!r}")


_KEYS = {
    "p": "p",
    "lin": "l_in", "l_in": "l_in",
    "lout": "l_out", "l_out": "l_out",
    "lswap": "l_swap", "l_swap": "l_swap",
    "ldir": "L_dir", "l_dir": "L_dir",
    "ldiv": "L_div", "l_div": "L_div",
    "omega": "omega_max", "omega_max": "omega_max",
}
_BOUND = re.compile(r"^\s*(\d+(?:\.\d*)?|\.\d+)?\s*(n)?\s*$")


def _bound(token: str, n: int) -> int:
    match = _BOUND.match(token)
    if not match or (match.group(1) is None and match.group(2) is None):
        raise ValueError(f"cannot parse range bound {token!r}")
    coef, scaled = match.group(1) or "1", match.group(2)
    if scaled:
        return _scaled(coef, n)
    if "." in coef:
        raise ValueError(f"unscaled bound must be an integer, got {token!r}")
    return int(coef)


def apply_overrides(params: TpsParams, overrides: Mapping[str, str], n: int) -> TpsParams:
    """Apply ``KEY=VALUE`` overrides; range values are ``lo:hi`` or one bound.

    A bound may carry a trailing ``n`` that scales it by the instance size,
    e.g. ``Ldir=5n:10n`` or ``lout=0.35n:0.45n``.
    """
    changes = {}
    for key, value in overrides.items():
        name = _KEYS.get(key.strip().lower())
        if name is None:
            raise ValueError(f"unknown parameter {key!r}")
        value = str(value).strip()
        if name == "p":
            changes[name] = float(value)
        elif name == "omega_max":
            changes[name] = int(value)
        else:
            parts = value.split(":")
            if len(parts) > 2:
                raise ValueError(f"bad range {value!r}")
            lo = _bound(parts[0], n)
            hi = _bound(parts[-1], n)
            changes[name] = (lo, hi)
    return replace(params, **changes)


@dataclass(frozen=True)
class StopCriterion:
    """When a run ends.

    Modes: ``rounds`` (``limit`` diversification rounds), ``stagnant`` (stop
    after ``limit`` consecutive non-improving rounds or ``cap`` rounds),
    ``target`` (best value at or below ``target``; optional ``cap`` rounds)
    and ``time`` (``seconds`` of wall clock).
    """

    mode: str
    limit: int | None = None
    cap: int | None = None
    target: int | None = None
    seconds: float | None = None

    def __post_init__(self):
        checks = {
            "rounds": self.limit is not None and self.limit >= 0,
            "stagnant": self.limit is not None and self.limit > 0 and self.cap is not None and self.cap > 0,
            "target": self.target is not None and (self.cap is None or self.cap > 0),
            "time": self.seconds is not None and self.seconds > 0,
        }
        if self.mode not in checks:
            raise ValueError(f"unknown stop mode {self.mode!r}")
        if not checks[self.mode]:
            raise ValueError(f"invalid thresholds for stop mode {self.mode!r}")

    @classmethod
    def rounds(cls, r: int) -> "StopCriterion":
        return cls("rounds", limit=r)

    @classmethod
    def stagnant(cls, s: int, cap: int) -> "StopCriterion":
        return cls("stagnant", limit=s, cap=cap)

    @classmethod
    def target_value(cls, value: int, cap: int | None = None) -> "StopCriterion":
        return cls("target", target=value, cap=cap)

    @classmethod
    def wall_clock(cls, seconds: float) -> "StopCriterion":
        return cls("time", seconds=seconds)

    @classmethod
    def parse(cls, text: str) -> "StopCriterion":
        """Parse ``rounds:R``, ``stagnant:S,CAP``, ``target:F[,CAP]`` or ``time:SECONDS``."""
        mode, _, arg = text.partition(":")
        nums = [a for a in arg.split(",") if a.strip()]
        try:
            if mode == "rounds" and len(nums) == 1:
                return cls.rounds(int(nums[0]))
            if mode == "stagnant" and len(nums) == 2:
                return cls.stagnant(int(nums[0]), int(nums[1]))
            if mode == "target" and len(nums) in (1, 2):
                return cls.target_value(int(nums[0]), int(nums[1]) if len(nums) == 2 else None)
            if mode == "time" and len(nums) == 1:
                return cls.wall_clock(float(nums[0]))
        except ValueError as exc:
            raise ValueError(f"bad stop criterion {text!r}: {exc}") from None
        raise ValueError(f"bad stop criterion {text!r}")

    def done(self, rounds: int, stagnant: int, best: float, elapsed: float) -> bool:
        if self.mode == "rounds":
            return rounds >= self.limit
        if self.mode == "stagnant":
            return stagnant >= self.limit or rounds >= self.cap
        if self.mode == "target":
            return best <= self.target or (self.cap is not None and rounds >= self.cap)
        return elapsed >= self.seconds


@dataclass
class RunResult:
    best_tree: SpanningTree
    best_value: int
    rounds: int
    moves: Counter
    descent: DescentStats
    wall_time: float
    seed: int
    variant: str = "v0"
    fallbacks: Counter = field(default_factory=Counter)
    move_log: list | None = None

    def record(self, instance: str, *, timing: bool = True) -> dict:
        """Flat result record; ``timing=False`` drops the only non-deterministic field."""
        rec = {
            "instance": instance,
            "seed": self.seed,
            "bestF": self.best_value,
            "rounds": self.rounds,
            "moves": dict(sorted(self.moves.items())),
            "discards": self.descent.discarded_edges,
            "total_candidates": self.descent.n1_candidate_edges,
        }
        if timing:
            rec["time_ms"] = round(self.wall_time * 1000, 3)
        return rec


class _Search:
    """State of one run: random stream, tabu history, counters and the best solution."""

    def __init__(self, inst, params, stop, seed, move_log):
        self.inst = inst
        self.params = params
        self.stop = stop
        self.rng = make_rng(seed, "solver")
        self.hist = TabuHistory.fresh(inst)
        self.stats = DescentStats()
        self.moves = Counter()
        self.log = MoveLog([] if move_log else None)
        self.best_tree = None
        self.best_value = math.inf
        self.level = math.inf
        self.t0 = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.t0

    def budget_spent(self) -> bool:
        if self.stop.mode == "time":
            return self.elapsed() >= self.stop.seconds
        if self.stop.mode == "target":
            return self.level <= self.stop.target
        return False

    def _clock(self):
        return self.budget_spent if self.stop.mode == "time" else None

    def draw(self, interval: tuple[int, int]) -> int:
        lo, hi = interval
        return int(self.rng.integers(lo, hi + 1))

    def descend(self, tree, d):
        before = (self.stats.edge_moves, self.stats.vertex_moves)
        descent(self.inst, tree, d, self.rng, self.stats, should_stop=self._clock())
        self.moves["descent_edge"] += self.stats.edge_moves - before[0]
        self.moves["descent_vertex"] += self.stats.vertex_moves - before[1]
        self.level = min(self.level, tree.objective)

    def directed(self, tree, d):
        prm = self.params
        strength = self.draw(prm.L_dir)
        l_in, l_out = self.draw(prm.l_in), self.draw(prm.l_out)
        aspiration = min(self.level, tree.objective)
        if self.rng.random() < prm.p:
            k = directed_perturb_edges(self.inst, tree, d, self.hist, l_in, l_out, strength,
                                       aspiration, self.rng, self.log, self._clock())
            self.moves["directed_edge"] += k
        else:
            l_swap = self.draw(prm.l_swap)
            k = directed_perturb_vertices(self.inst, tree, d, self.hist, l_swap, strength,
                                          aspiration, self.rng, self.log, self._clock(),
                                          edge_tenures=(l_in, l_out))
            self.moves["directed_vertex"] += k

    def explore(self, tree, d):
        best_t, best_d = tree.copy(), d.copy()
        omega = 0
        while omega < self.params.omega_max and not self.budget_spent():
            self.directed(tree, d)
            self.descend(tree, d)
            if tree.objective < best_t.objective:
                best_t, best_d = tree.copy(), d.copy()
                omega = 0
            else:
                omega += 1
        return best_t, best_d

    def diversify(self, tree, d, variant):
        if variant == "v1":
            tree = random_spanning_tree(self.inst, self.rng)
            self.moves["restarts"] += 1
            return tree, build_contributions(self.inst, tree)
        if variant == "v2":
            self.directed(tree, d)
            return tree, d
        self.moves["diversified"] += diversified_perturb(
            self.inst, tree, d, self.draw(self.params.L_div), self.rng)
        return tree, d

    def record_best(self, tree) -> bool:
        if tree.objective < self.best_value:
            self.best_tree = tree.copy()
            self.best_value = tree.objective
            return True
        return False


def explore_local_optima(
    inst: Instance,
    tree: SpanningTree,
    d: np.ndarray,
    hist: TabuHistory,
    params: TpsParams,
    best_overall: float,
    rng: np.random.Generator,
    stats: DescentStats | None = None,
    log: MoveLog | None = None,
) -> tuple[SpanningTree, np.ndarray, Counter]:
    """Directed perturbation + descent rounds until ``omega_max`` fail in a row.

    Returns the best local optimum found (tree and contributions) and the
    per-operator move counts.
    """
    search = _Search(inst, params, StopCriterion.rounds(0), 0, move_log=False)
    search.rng, search.hist = rng, hist
    search.stats = DescentStats() if stats is None else stats
    search.log = MoveLog() if log is None else log
    search.level = best_overall
    best_t, best_d = search.explore(tree, d)
    return best_t, best_d, search.moves


def tps_run(inst: Instance, params: TpsParams, stop: StopCriterion, seed: int, *,
            variant: str = "v0", move_log: bool = False) -> RunResult:
    """One complete run; the result is a function of its arguments (except in ``time`` mode)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    search = _Search(inst, params, stop, seed, move_log)
    tree = random_spanning_tree(inst, search.rng)
    d = build_contributions(inst, tree)
    search.descend(tree, d)
    tree, d = search.explore(tree, d)
    search.record_best(tree)

    rounds = stagnant = 0
    while not stop.done(rounds, stagnant, search.best_value, search.elapsed()):
        tree, d = search.diversify(tree, d, variant)
        search.descend(tree, d)
        tree, d = search.explore(tree, d)
        rounds += 1
        if search.record_best(tree):
            stagnant = 0
        else:
            stagnant += 1

    return RunResult(
        best_tree=search.best_tree,
        best_value=int(search.best_value),
        rounds=rounds,
        moves=search.moves,
        descent=search.stats,
        wall_time=search.elapsed(),
        seed=seed,
        variant=variant,
        fallbacks=search.log.fallbacks,
        move_log=search.log.entries,
    )


def variant_run(inst: Instance, params: TpsParams, stop: StopCriterion, seed: int,
                variant: str, *, move_log: bool = False) -> RunResult:
    """Run with the diversification step replaced: v0 standard, v1 random restart, v2 directed."""
    return tps_run(inst, params, stop, seed, variant=variant.lower(), move_log=move_log)
