"""Exact expert solvers and dataset labelling.

``dp_solve`` is a Held-Karp style dynamic program over ``(visited set, last
node)`` states. With time windows a shorter partial path can arrive later, so
each state keeps a Pareto frontier of ``(length, arrival)`` labels rather than
a single best length.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from .core import Instance, check_legality, tour_length
from .datagen import DatasetRecord

log = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 10
DP_MAX_N = 18
# slack for the unreachable-deadline prune so rounding never cuts a feasible path
_PRUNE_TOL = 1e-9


class ProblemTooLargeError(ValueError):
    pass


@dataclass
class ParetoLabel:
    subset: int
    last: int
    frontier: list = field(default_factory=list)  # [(length, arrival, path)]

    def is_strict(self) -> bool:
        pts = [(l, a) for l, a, *_ in self.frontier]
        return all(l0 < l1 and a0 > a1 for (l0, a0), (l1, a1) in zip(pts, pts[1:]))


def pareto_reduce(labels: Iterable[tuple]) -> list:
    """Non-dominated ``(length, arrival, path)`` labels, sorted by length.

    Exact duplicates in both criteria keep the lexicographically smallest path.
    """
    out = []
    best_arrival = np.inf
    for lab in sorted(labels):
        if lab[1] < best_arrival:
            out.append(lab)
            best_arrival = lab[1]
    return out


def brute_force_solve(inst: Instance, max_n: int = BRUTE_FORCE_MAX_N):
    """Enumerate every tour in lexicographic order; return the shortest legal
    one as ``(tour, length)`` or ``None``.

    Branches are abandoned once a deadline is missed, since visit times only
    grow along a tour.
    """
    n = inst.n
    if n > max_n:
        raise ProblemTooLargeError(f"brute force limited to n <= {max_n}, got {n}")
    d = inst.dist.tolist()
    ts = inst.tw_start.tolist()
    te = inst.deadline.tolist()
    best_len = np.inf
    best = None
    path = [0]
    remaining = list(range(1, n + 1))

    def rec(t, length):
        nonlocal best_len, best
        last = path[-1]
        if not remaining:
            total = length + d[last][0]
            if total < best_len:
                best_len, best = total, tuple(path)
            return
        for idx, v in enumerate(remaining):
            arr = max(t + d[last][v], ts[v])
            if arr > te[v]:
                continue
            path.append(v)
            del remaining[idx]
            rec(arr, length + d[last][v])
            remaining.insert(idx, v)
            path.pop()

    rec(max(0.0, ts[0]), 0.0)
    if best is None:
        return None
    return best, float(best_len)


def dp_solve(inst: Instance, max_n: int = DP_MAX_N, return_labels: bool = False):
    """Exact bi-criteria dynamic program; returns ``(tour, length)`` or ``None``.

    A transition to ``v`` is kept only when ``max(arrival + L, t_s[v]) <= t_e[v]``
    and every still-unvisited node remains reachable before its deadline.
    Among equal-length optimal tours the lexicographically smallest surviving
    one is returned. With ``return_labels`` the final layer of
    :class:`ParetoLabel` objects is returned as well.
    """
    n = inst.n
    if n > max_n:
        raise ProblemTooLargeError(f"dp_solve limited to n <= {max_n}, got {n}")
    d = inst.dist.tolist()
    ts = inst.tw_start.tolist()
    te = inst.deadline.tolist()
    full = (1 << n) - 1
    t0 = max(0.0, ts[0])

    def alive(mask, v, arr):
        dv = d[v]
        for u in range(1, n + 1):
            if not mask >> (u - 1) & 1 and arr + dv[u] > te[u] + _PRUNE_TOL:
                return False
        return True

    layer = {}
    for v in range(1, n + 1):
        arr = max(t0 + d[0][v], ts[v])
        bit = 1 << (v - 1)
        if arr <= te[v] and alive(bit, v, arr):
            layer[(bit, v)] = [(d[0][v], arr, (0, v))]

    for _ in range(n - 1):
        nxt: dict = {}
        for (mask, last), frontier in layer.items():
            dl = d[last]
            for v in range(1, n + 1):
                bit = 1 << (v - 1)
                if mask & bit:
                    continue
                nmask = mask | bit
                for length, arr, path in frontier:
                    a = max(arr + dl[v], ts[v])
                    if a > te[v] or not alive(nmask, v, a):
                        continue
                    nxt.setdefault((nmask, v), []).append((length + dl[v], a, path + (v,)))
        layer = {k: pareto_reduce(v) for k, v in nxt.items()}

    best = None
    for (mask, last), frontier in layer.items():
        if mask != full:
            continue
        for length, _arr, path in frontier:
            cand = (length + d[last][0], path)
            if best is None or cand < best:
                best = cand
    result = None if best is None else (best[1], float(best[0]))
    if return_labels:
        labels = [ParetoLabel(m, l, f) for (m, l), f in sorted(layer.items())]
        return result, labels
    return result


SOLVERS = {"dp": dp_solve, "brute": brute_force_solve}


def _solve_record(rec: DatasetRecord, solver: str):
    return SOLVERS[solver](rec.instance)


def label_dataset(records: Sequence[DatasetRecord], solver: str = "dp",
                  workers: int = 1) -> tuple[list[DatasetRecord], int]:
    """Attach expert tours; infeasible instances are dropped and counted."""
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; choose from {sorted(SOLVERS)}")
    fn = partial(_solve_record, solver=solver)
    if workers > 1 and len(records) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as pool:
            results = list(pool.map(fn, records, chunksize=max(1, len(records) // (4 * workers))))
    else:
        results = [fn(r) for r in records]
    labeled, screened = [], 0
    for rec, res in zip(records, results):
        if res is None:
            screened += 1
            continue
        tour, length = res
        labeled.append(replace(rec, expert_tour=tuple(tour), expert_length=length))
    return labeled, screened


@dataclass
class ImportResult:
    records: list
    rejected: list  # (line number, record id or None, reason)

    @property
    def attached(self) -> int:
        return sum(r.labeled for r in self.records)


def parse_tour(tokens: Sequence[str], n: int) -> tuple:
    tour = tuple(int(t) for t in tokens)
    # LKH-style rows may omit the depot
    if len(tour) == n and 0 not in tour:
        tour = (0,) + tour
    return tour


def import_external_solutions(records: Sequence[DatasetRecord], lines: Iterable[str]) -> ImportResult:
    """Attach tours from ``<id> <node> <node> ...`` rows after a legality check.

    Rows that are malformed, name an unknown id or carry an illegal tour are
    rejected individually. A repeated id overrides the earlier row.
    """
    if isinstance(lines, (str, os.PathLike)):
        with open(lines) as fh:
            lines = fh.read().splitlines()
    by_id = {r.id: r for r in records}
    chosen: dict = {}
    rejected = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        rid = parts[0]
        if rid not in by_id:
            rejected.append((lineno, rid, "unknown id"))
            continue
        inst = by_id[rid].instance
        try:
            tour = parse_tour(parts[1:], inst.n)
        except ValueError:
            rejected.append((lineno, rid, "malformed row"))
            continue
        report = check_legality(inst, tour)
        if not report.is_legal:
            reason = report.reason or "illegal tour"
            rejected.append((lineno, rid, f"illegal tour: {reason}"))
            continue
        if rid in chosen:
            log.warning("duplicate solution row for %s at line %d; keeping the later one", rid, lineno)
        chosen[rid] = tour
    out = []
    for rec in records:
        if rec.id in chosen:
            tour = chosen[rec.id]
            rec = replace(rec, expert_tour=tour, expert_length=tour_length(rec.instance, tour))
        out.append(rec)
    return ImportResult(out, rejected)
