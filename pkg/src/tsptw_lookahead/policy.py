"""Route construction: greedy baselines, scorer-driven decoding and
time-offset adaptation at inference."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import Instance, check_legality, propagate
from .datagen import expected_tour_constant
from .features import state_features
from .scorer import ScorerParams, softmax

DEFAULT_EPSILON_FRACTIONS = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2)


def greedy_mt(inst: Instance) -> tuple:
    """Always go to the node that can be served soonest, waiting included."""
    d = inst.dist
    s = inst.tw_start
    left = list(range(1, inst.n + 1))
    tour, t = [0], max(0.0, float(s[0]))
    while left:
        cur = tour[-1]
        arrive = [max(t + d[cur, v], s[v]) for v in left]
        j = int(np.argmin(arrive))
        t = arrive[j]
        tour.append(left.pop(j))
    return tuple(tour)


def greedy_lt(inst: Instance) -> tuple:
    """Visit nodes by ascending deadline; unconstrained ends go last."""
    nodes = range(1, inst.n + 1)
    key = lambda v: (bool(inst.end_unconstrained[v]), float(inst.tw_end[v]), v)
    return (0,) + tuple(sorted(nodes, key=key))


def greedy_es(inst: Instance) -> tuple:
    """Visit nodes by ascending window start."""
    return (0,) + tuple(sorted(range(1, inst.n + 1), key=lambda v: (float(inst.tw_start[v]), v)))


def epsilon_grid(n: int, fractions: Sequence[float] = DEFAULT_EPSILON_FRACTIONS) -> list[float]:
    grid = sorted({0.0, *(f * expected_tour_constant(n) for f in fractions)})
    if grid[0] < 0:
        raise ValueError("time offsets must be non-negative")
    return grid


def construct_route(inst: Instance, policy: ScorerParams, decode: str = "greedy",
                    time_offset: float = 0.0, rng: np.random.Generator | None = None):
    """Build a full tour one node at a time with ``policy``.

    Features see the perceived time ``t + time_offset``; the returned schedule
    uses true times. Illegal continuations are allowed.
    """
    if decode not in ("greedy", "sample"):
        raise ValueError(f"unknown decode {decode!r}")
    if decode == "sample" and rng is None:
        rng = np.random.default_rng(0)
    cfg = policy.config
    d = inst.dist
    tour = [0]
    t = max(0.0, float(inst.tw_start[0]))
    for _ in range(inst.n):
        cand, rows, ctx = state_features(inst, tour, cfg.level, t + time_offset,
                                         policy.lookahead, cfg.k, cfg.m)
        logits = policy.logits(rows, ctx)
        if decode == "greedy":
            j = int(np.argmax(logits))
        else:
            j = int(rng.choice(len(cand), p=softmax(logits)))
        v = int(cand[j])
        t = max(t + d[tour[-1], v], float(inst.tw_start[v]))
        tour.append(v)
    return tuple(tour), propagate(inst, tour)


def musla_adapt_solve(inst: Instance, policy: ScorerParams, grid: Sequence[float] | None = None):
    """Decode once per time offset and keep the shortest legal tour.

    Falls back to the zero-offset tour when no offset gives a legal one.
    Returns ``(tour, schedule, chosen offset)``.
    """
    grid = epsilon_grid(inst.n) if grid is None else sorted(set(float(e) for e in grid) | {0.0})
    if grid[0] < 0:
        raise ValueError("time offsets must be non-negative")
    best = None
    base = None
    for eps in grid:
        tour, sched = construct_route(inst, policy, time_offset=eps)
        if eps == 0.0:
            base = (tour, sched, eps)
        if check_legality(inst, tour).is_legal:
            if best is None or sched.total_length < best[1].total_length:
                best = (tour, sched, eps)
    return best if best is not None else base

