"""Problem representation, time propagation and legality checking.

Node 0 is the depot. Travel speed is 1, so travel time equals Euclidean
distance. Arriving before a window opens means waiting until it opens;
arriving after it closes is lateness, which makes a tour illegal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np


class MalformedTourError(ValueError):
    """Raised when a node sequence is not a valid (partial) tour."""


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class TimeWindow:
    start: float
    end: float = 0.0
    end_unconstrained: bool = False

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"window start must be >= 0, got {self.start}")
        if not self.end_unconstrained and self.end < self.start:
            raise ValueError(f"window end {self.end} before start {self.start}")

    @classmethod
    def unconstrained(cls, start: float = 0.0) -> "TimeWindow":
        return cls(start, 0.0, True)


def distance(a: Point, b: Point) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


@dataclass(frozen=True, eq=False)
class Instance:
    """A TSPTW instance stored as parallel arrays over nodes 0..n.

    ``tw_end`` holds 0 wherever ``end_unconstrained`` is set; use
    :attr:`deadline` for the value legality is judged against.
    """

    coords: np.ndarray
    tw_start: np.ndarray
    tw_end: np.ndarray
    end_unconstrained: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        start = np.asarray(self.tw_start, dtype=float).reshape(-1)
        free = np.asarray(self.end_unconstrained, dtype=bool).reshape(-1)
        end = np.where(free, 0.0, np.asarray(self.tw_end, dtype=float).reshape(-1))
        if not (len(coords) == len(start) == len(end) == len(free)):
            raise ValueError("coords and window arrays differ in length")
        if len(coords) < 2:
            raise ValueError("an instance needs the depot and at least one node")
        if not np.all(np.isfinite(coords)) or not np.all(np.isfinite(start)):
            raise ValueError("coordinates and window starts must be finite")
        if np.any(start < 0):
            raise ValueError("window starts must be >= 0")
        if np.any(~free & (end < start)):
            raise ValueError("window end before start")
        for name, arr in (("coords", coords), ("tw_start", start),
                          ("tw_end", end), ("end_unconstrained", free)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_nodes(cls, nodes: Sequence[tuple[Point, TimeWindow]]) -> "Instance":
        return cls(
            coords=[p for p, _ in nodes],
            tw_start=[w.start for _, w in nodes],
            tw_end=[w.end for _, w in nodes],
            end_unconstrained=[w.end_unconstrained for _, w in nodes],
        )

    @classmethod
    def build(cls, coords, windows=None, depot_window=None) -> "Instance":
        """Convenience constructor: ``windows`` covers the non-depot nodes only
        (``None`` entries mean unconstrained); the depot defaults to
        ``[0, unconstrained]``."""
        coords = np.asarray(coords, dtype=float)
        n1 = len(coords)
        if windows is None:
            windows = [None] * (n1 - 1)
        if len(windows) != n1 - 1:
            raise ValueError("need one window per non-depot node")
        ws = [depot_window or TimeWindow.unconstrained()]
        for w in windows:
            if w is None:
                ws.append(TimeWindow.unconstrained())
            elif isinstance(w, TimeWindow):
                ws.append(w)
            else:
                ws.append(TimeWindow(float(w[0]), float(w[1])))
        return cls.from_nodes([(Point(*c), w) for c, w in zip(coords, ws)])

    @property
    def n(self) -> int:
        return len(self.coords) - 1

    @cached_property
    def dist(self) -> np.ndarray:
        d = self.coords[:, None, :] - self.coords[None, :, :]
        out = np.hypot(d[..., 0], d[..., 1])
        out.setflags(write=False)
        return out

    @cached_property
    def deadline(self) -> np.ndarray:
        out = np.where(self.end_unconstrained, np.inf, self.tw_end)
        out.setflags(write=False)
        return out

    def point(self, i: int) -> Point:
        return Point(float(self.coords[i, 0]), float(self.coords[i, 1]))

    def window(self, i: int) -> TimeWindow:
        return TimeWindow(float(self.tw_start[i]), float(self.tw_end[i]),
                          bool(self.end_unconstrained[i]))

    def scaled(self, c: float) -> "Instance":
        return Instance(self.coords * c, self.tw_start * c, self.tw_end * c,
                        self.end_unconstrained)


@dataclass
class Schedule:
    """Visit times along a (partial) tour.

    ``path_length`` covers the edges of ``order``; ``total_length`` adds the
    edge from the last node back to the depot.
    """

    order: tuple
    visit_times: np.ndarray
    waits: np.ndarray
    lateness: np.ndarray
    path_length: float
    total_length: float
    total_timeout: float = field(init=False)

    def __post_init__(self):
        self.total_timeout = float(np.sum(self.lateness))

    @property
    def end_time(self) -> float:
        return float(self.visit_times[-1])


def _validate_prefix(inst: Instance, prefix: Sequence[int]) -> tuple:
    order = tuple(int(v) for v in prefix)
    if not order or order[0] != 0:
        raise MalformedTourError("tour must start at the depot (node 0)")
    if len(set(order)) != len(order):
        raise MalformedTourError(f"repeated node in {order}")
    if min(order) < 0 or max(order) > inst.n:
        raise MalformedTourError(f"node index out of range in {order}")
    return order


def propagate(inst: Instance, prefix: Sequence[int]) -> Schedule:
    """Apply the waiting rule along ``prefix``.

    Lateness is recorded but never stops propagation.
    """
    order = _validate_prefix(inst, prefix)
    m = len(order)
    times = np.empty(m)
    waits = np.empty(m)
    late = np.empty(m)
    d = inst.dist
    t = max(0.0, float(inst.tw_start[0]))
    times[0], waits[0] = t, t
    length = 0.0
    for k in range(1, m):
        a, b = order[k - 1], order[k]
        length += d[a, b]
        arrive = t + d[a, b]
        t = max(arrive, float(inst.tw_start[b]))
        times[k] = t
        waits[k] = t - arrive
    late[:] = np.maximum(0.0, times - inst.deadline[list(order)])
    total = length + d[order[-1], 0]
    return Schedule(order, times, waits, late, float(length), float(total))


def tour_length(inst: Instance, tour: Sequence[int]) -> float:
    """Closed tour length, summed left to right then the return edge."""
    d = inst.dist
    order = [int(v) for v in tour]
    length = 0.0
    for a, b in zip(order[:-1], order[1:]):
        length += d[a, b]
    return float(length + d[order[-1], order[0]])


def is_permutation(inst: Instance, tour: Sequence[int]) -> bool:
    order = list(tour)
    return (len(order) == inst.n + 1 and bool(order) and order[0] == 0
            and sorted(order) == list(range(inst.n + 1)))


@dataclass
class LegalityReport:
    is_legal: bool
    lateness: np.ndarray
    total_timeout: float
    reason: str = ""


def check_legality(inst: Instance, tour: Sequence[int]) -> LegalityReport:
    """Never raises; malformed tours come back illegal with a reason."""
    try:
        order = [int(v) for v in tour]
    except (TypeError, ValueError):
        return LegalityReport(False, np.zeros(0), 0.0, "not a permutation")
    if not is_permutation(inst, order):
        reason = ("does not start at depot" if order and order[0] != 0
                  else "not a permutation")
        return LegalityReport(False, np.zeros(0), 0.0, reason)
    sched = propagate(inst, order)
    legal = bool(np.all(sched.lateness == 0.0))
    return LegalityReport(legal, sched.lateness, sched.total_timeout,
                          "" if legal else "deadline missed")
