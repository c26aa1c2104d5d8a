"""Per-candidate features for route construction.

Blocks, by feature level:

* ``static``  - candidate's static node row (7) + mean of its edge rows (5)
* ``dynamic`` - static + dynamic block (12)
* ``osla``    - dynamic + one-step look-ahead block (6)
* ``musla``   - osla + multi-step look-ahead block (6)

Every level shares a 16-value context vector: mean static node row, step
fraction, current time over T_n and the current node's static row. The time
slot is left at 0 for the ``static`` level, which sees no time information.
Unconstrained window ends are encoded as 0.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .core import Instance, propagate
from .datagen import DatasetRecord, expected_tour_constant

LEVELS = ("static", "dynamic", "osla", "musla")
STATIC_NODE_DIM = 7
EDGE_DIM = 5
DYNAMIC_DIM = 12
LOOKAHEAD_DIM = 6
CONTEXT_DIM = 2 * STATIC_NODE_DIM + 2
ROW_DIMS = {
    "static": STATIC_NODE_DIM + EDGE_DIM,
    "dynamic": STATIC_NODE_DIM + EDGE_DIM + DYNAMIC_DIM,
    "osla": STATIC_NODE_DIM + EDGE_DIM + DYNAMIC_DIM + LOOKAHEAD_DIM,
    "musla": STATIC_NODE_DIM + EDGE_DIM + DYNAMIC_DIM + 2 * LOOKAHEAD_DIM,
}


class CandidateScorer(Protocol):
    def logits(self, rows: np.ndarray, context: np.ndarray) -> np.ndarray: ...


def _check_level(level: str) -> None:
    if level not in LEVELS:
        raise ValueError(f"unknown feature level {level!r}; expected one of {LEVELS}")


def unvisited(inst: Instance, prefix: Sequence[int]) -> np.ndarray:
    seen = np.zeros(inst.n + 1, dtype=bool)
    seen[list(prefix)] = True
    return np.flatnonzero(~seen)


def current_time(inst: Instance, prefix: Sequence[int]) -> float:
    return propagate(inst, prefix).end_time


def static_node_features(inst: Instance) -> np.ndarray:
    c = inst.coords
    rel = c - c[0]
    return np.column_stack([c, inst.tw_start, inst.tw_end, rel, inst.dist[:, 0]])


def neighbor_count(n: int) -> int:
    """Top 20% of the ``n + 1`` nodes, at least one and never more than ``n``."""
    return min(n, max(1, -(-(n + 1) // 5)))


@dataclass
class StaticEdgeFeatures:
    neighbors: np.ndarray  # (n + 1, k) node indices, nearest first
    values: np.ndarray     # (n + 1, k, 5)


def static_edge_features(inst: Instance) -> StaticEdgeFeatures:
    k = neighbor_count(inst.n)
    d = inst.dist.copy()
    np.fill_diagonal(d, np.inf)
    nbr = np.argsort(d, axis=1, kind="stable")[:, :k]
    i = np.arange(inst.n + 1)[:, None]
    s, e = inst.tw_start, inst.tw_end
    vals = np.stack([
        inst.dist[i, nbr],
        s[nbr] - s[i],
        s[nbr] - e[i],
        e[nbr] - s[i],
        e[nbr] - e[i],
    ], axis=-1)
    return StaticEdgeFeatures(nbr, vals)


class _Static:
    __slots__ = ("node", "edge_mean", "node_mean", "horizon")

    def __init__(self, inst: Instance):
        self.node = static_node_features(inst)
        self.edge_mean = static_edge_features(inst).values.mean(axis=1)
        self.node_mean = self.node.mean(axis=0)
        self.horizon = expected_tour_constant(inst.n)


_STATIC_CACHE: "weakref.WeakKeyDictionary[Instance, _Static]" = weakref.WeakKeyDictionary()


def _static(inst: Instance) -> _Static:
    st = _STATIC_CACHE.get(inst)
    if st is None:
        st = _STATIC_CACHE[inst] = _Static(inst)
    return st


def context_vector(inst: Instance, prefix: Sequence[int], t_now: float,
                   level: str = "dynamic") -> np.ndarray:
    st = _static(inst)
    t = 0.0 if level == "static" else t_now / st.horizon
    return np.r_[st.node_mean, (len(prefix) - 1) / inst.n, t, st.node[int(prefix[-1])]]


def dynamic_features(inst: Instance, prefix: Sequence[int], t_now: float,
                     candidates: np.ndarray | None = None) -> np.ndarray:
    """12 columns per candidate, computed at the end of ``prefix`` at time ``t_now``."""
    cur = int(prefix[-1])
    x = unvisited(inst, prefix) if candidates is None else np.asarray(candidates)
    a = inst.coords
    s, e = inst.tw_start, inst.tw_end
    L = inst.dist[cur, x]
    cost = np.maximum(L + t_now, s[x]) - t_now
    return np.column_stack([
        a[x], a[x] - a[cur], L, cost,
        s[x] - t_now, e[x] - t_now,
        s[x] - s[cur], e[x] - s[cur], s[x] - e[cur], e[x] - e[cur],
    ])


def osla_block(inst: Instance, prefix: Sequence[int], t_now: float,
               candidates: np.ndarray | None = None) -> np.ndarray:
    """One-step look-ahead rows for every candidate at once.

    For candidate ``c`` the route is extended by ``c`` (waiting rule), then the
    remaining nodes are scanned for deadlines already missed (f1-f3) and for
    the cheapest next visit (f4, f5). f6 marks the row as present.
    """
    cur = int(prefix[-1])
    rest = unvisited(inst, prefix)
    cand = rest if candidates is None else np.asarray(candidates)
    out = np.zeros((len(cand), LOOKAHEAD_DIM))
    out[:, 5] = 1.0
    if len(cand) == 0:
        return out
    d = inst.dist
    t1 = np.maximum(t_now + d[cur, cand], inst.tw_start[cand])
    other = rest[None, :] != cand[:, None]  # (C, R)
    if not other.any():
        return out
    arrive = t1[:, None] + d[np.ix_(cand, rest)]
    over = arrive - inst.deadline[rest][None, :]
    late = other & (over > 0)
    over_late = np.where(late, over, 0.0)
    out[:, 0] = late.any(axis=1)
    out[:, 1] = over_late.max(axis=1)
    out[:, 2] = over_late.sum(axis=1)
    cost = np.where(other, np.maximum(arrive, inst.tw_start[rest][None, :]), np.inf)
    g = np.argmin(cost, axis=1)  # first minimum -> lowest node index
    has_next = other.any(axis=1)
    rows = np.flatnonzero(has_next)
    out[rows, 3] = d[cand[rows], rest[g[rows]]]
    out[rows, 4] = cost[rows, g[rows]] - t1[rows]
    return out


def osla_features(inst: Instance, prefix: Sequence[int], candidate: int,
                  t_now: float | None = None) -> np.ndarray:
    """Look-ahead block ``(f1, ..., f6)`` of a single unvisited candidate."""
    if candidate in set(int(v) for v in prefix):
        raise ValueError(f"candidate {candidate} already visited")
    if t_now is None:
        t_now = current_time(inst, prefix)
    return osla_block(inst, prefix, t_now, np.array([candidate]))[0]


def _rows(inst: Instance, prefix: Sequence[int], t_now: float, cand: np.ndarray,
          level: str) -> np.ndarray:
    st = _static(inst)
    parts = [st.node[cand], st.edge_mean[cand]]
    if level != "static":
        parts.append(dynamic_features(inst, prefix, t_now, cand))
    if level in ("osla", "musla"):
        parts.append(osla_block(inst, prefix, t_now, cand))
    return np.hstack(parts)


def _osla_argmax(inst, prefix, t_now, policy: CandidateScorer) -> int:
    cand = unvisited(inst, prefix)
    rows = _rows(inst, prefix, t_now, cand, "osla")
    ctx = context_vector(inst, prefix, t_now, "osla")
    return int(cand[np.argmax(policy.logits(rows, ctx))])


def musla_features(inst: Instance, prefix: Sequence[int], osla_policy: CandidateScorer,
                   k: int = 5, m: int = 1, t_now: float | None = None,
                   osla_rows: np.ndarray | None = None):
    """Multi-step look-ahead blocks for every candidate plus the top-k mask.

    Candidates are ranked by ``osla_policy``; each of the top ``k`` is visited
    and the route then follows the policy's argmax for ``m`` more steps. The
    block is the look-ahead row of the final node of that extended route.
    Candidates outside the top ``k``, or with fewer than ``m`` nodes left to
    extend through, get an all-zero row (f6 = 0).
    """
    if k < 1 or m < 0:
        raise ValueError("need k >= 1 and m >= 0")
    prefix = [int(v) for v in prefix]
    if t_now is None:
        t_now = current_time(inst, prefix)
    cand = unvisited(inst, prefix)
    block = np.zeros((len(cand), LOOKAHEAD_DIM))
    mask = np.zeros(len(cand), dtype=bool)
    if osla_rows is None:
        osla_rows = _rows(inst, prefix, t_now, cand, "osla")
    logits = osla_policy.logits(osla_rows, context_vector(inst, prefix, t_now, "osla"))
    top = np.argsort(-logits, kind="stable")[:k]
    d = inst.dist
    for j in top:
        x = int(cand[j])
        if len(cand) - 1 < m:
            continue
        route, times = prefix + [x], [t_now, max(t_now + d[prefix[-1], x], inst.tw_start[x])]
        for _ in range(m):
            nxt = _osla_argmax(inst, route, times[-1], osla_policy)
            times.append(max(times[-1] + d[route[-1], nxt], inst.tw_start[nxt]))
            route.append(nxt)
        block[j] = osla_block(inst, route[:-1], times[-2], np.array([route[-1]]))[0]
        mask[j] = True
    return block, mask


def state_features(inst: Instance, prefix: Sequence[int], level: str, t_now: float,
                   osla_policy: CandidateScorer | None = None, k: int = 5, m: int = 1):
    """``(candidates, rows, context)`` for one construction state."""
    _check_level(level)
    cand = unvisited(inst, prefix)
    base = "osla" if level == "musla" else level
    rows = _rows(inst, prefix, t_now, cand, base)
    if level == "musla":
        if osla_policy is None:
            raise ValueError("musla features need a trained one-step policy")
        block, _ = musla_features(inst, prefix, osla_policy, k, m, t_now, osla_rows=rows)
        rows = np.hstack([rows, block])
    return cand, rows, context_vector(inst, prefix, t_now, level)


@dataclass
class TrainingSample:
    instance_id: str
    step: int
    candidates: np.ndarray
    rows: np.ndarray
    context: np.ndarray
    target: int  # position of the expert's next node within ``candidates``

    @property
    def expert_node(self) -> int:
        return int(self.candidates[self.target])


def build_training_samples(record: DatasetRecord, level: str,
                           osla_policy: CandidateScorer | None = None,
                           k: int = 5, m: int = 1) -> list[TrainingSample]:
    """One sample per construction step along the expert tour."""
    _check_level(level)
    if not record.labeled:
        raise ValueError(f"record {record.id} has no expert tour")
    if level == "musla" and osla_policy is None:
        raise ValueError("musla samples need a trained one-step policy")
    inst = record.instance
    tour = [int(v) for v in record.expert_tour]
    times = propagate(inst, tour).visit_times
    out = []
    for i in range(inst.n):
        prefix = tour[: i + 1]
        cand, rows, ctx = state_features(inst, prefix, level, float(times[i]), osla_policy, k, m)
        target = int(np.flatnonzero(cand == tour[i + 1])[0])
        out.append(TrainingSample(record.id, i, cand, rows, ctx, target))
    return out
