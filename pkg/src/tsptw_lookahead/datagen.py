"""Benchmark instance generators: Medium, Hard (train/eval), weakly
constrained and grouped supplements, and corpus mixing.

Every generator is a pure function of ``(params, count, seed)``. Record ``i``
draws from its own stream seeded by ``(seed, generator, i)``, so generating
in parallel or in slices yields the same records as a serial run.
"""
from __future__ import annotations

import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .core import Instance

#: E|U - V| for U, V uniform on the unit square, to four places.
UNIT_SQUARE_MEAN_DISTANCE = 0.5214


def expected_tour_constant(n: int) -> float:
    """Expected length of a random closed tour through ``n + 1`` uniform points."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return UNIT_SQUARE_MEAN_DISTANCE * (n + 1)


@dataclass(frozen=True)
class MediumParams:
    n: int
    alpha: float = 0.5
    beta: float = 0.75
    t_n: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 < self.alpha <= self.beta:
            raise ValueError("need 0 < alpha <= beta")
        if self.t_n is not None and self.t_n <= 0:
            raise ValueError("t_n must be positive")

    @property
    def horizon(self) -> float:
        return self.t_n if self.t_n is not None else expected_tour_constant(self.n)


@dataclass(frozen=True)
class HardParams:
    n: int
    group_fraction: float = 0.3
    alpha: float = 0.5
    beta: float = 0.75
    n_groups: int | None = None  # fixes k_p instead of the size rule

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 < self.group_fraction < 1:
            raise ValueError("group_fraction must lie in (0, 1)")
        if not 0 < self.alpha <= self.beta:
            raise ValueError("need 0 < alpha <= beta")

    @property
    def n_grouped(self) -> int:
        return math.floor(self.group_fraction * self.n)


@dataclass
class DatasetRecord:
    id: str
    instance: Instance
    expert_tour: tuple | None = None
    expert_length: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.expert_tour is None) != (self.expert_length is None):
            raise ValueError("expert_tour and expert_length come together")

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def labeled(self) -> bool:
        return self.expert_tour is not None


def record_rng(seed: int, generator: str, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), zlib.crc32(generator.encode()), int(index)])


def sample_group_count(n: int, rng: np.random.Generator) -> int:
    """k_p = 2 for small instances, otherwise uniform on {2, ..., 7}."""
    if n < 35:
        return 2
    return int(rng.integers(2, 8))


def _medium_windows(rng, size, horizon, alpha, beta):
    start = rng.uniform(0.0, horizon, size)
    end = start + horizon * rng.uniform(alpha, beta, size)
    return start, end


def _split_groups(nodes: np.ndarray, k: int) -> list[list[int]]:
    # round-robin over an already shuffled node array
    return [sorted(int(v) for v in nodes[g::k]) for g in range(k)]


def _make(coords, start, end, free=None) -> Instance:
    if free is None:
        free = np.zeros(len(coords), dtype=bool)
        free[0] = True
    start = np.array(start, dtype=float)
    end = np.array(end, dtype=float)
    start[0], end[0] = 0.0, 0.0
    return Instance(coords, start, end, free)


def _one_medium(params: MediumParams, seed: int, kind: str, i: int):
    rng = record_rng(seed, kind, i)
    coords = rng.uniform(0.0, 1.0, (params.n + 1, 2))
    s, e = _medium_windows(rng, params.n, params.horizon, params.alpha, params.beta)
    return coords, np.r_[0.0, s], np.r_[0.0, e]


def _meta(kind: str, params, seed: int, **extra) -> dict:
    p = asdict(params) if hasattr(params, "__dataclass_fields__") else dict(params)
    return {"generator": kind, "params": p, "seed": int(seed), **extra}


def _map(fn: Callable, items: Sequence, workers: int = 1) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _medium_record(i, params, seed):
    coords, s, e = _one_medium(params, seed, "medium", i)
    return DatasetRecord(f"medium-{seed}-{i:06d}", _make(coords, s, e),
                         meta=_meta("medium", params, seed, index=i))


def gen_medium(params: MediumParams, count: int, seed: int, workers: int = 1) -> list[DatasetRecord]:
    """Uniform coordinates, ``t_s ~ U[0, T_n]`` and width ``T_n * U[alpha, beta]``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return _map(partial(_medium_record, params=params, seed=seed), range(count), workers)


def _hard_record(i, params: HardParams, seed: int, evaluation: bool):
    kind = "hard-eval" if evaluation else "hard-train"
    rng = record_rng(seed, kind, i)
    n = params.n
    horizon = expected_tour_constant(n)
    coords = rng.uniform(0.0, 1.0, (n + 1, 2))
    if evaluation:
        start, end = np.zeros(n + 1), np.full(n + 1, horizon)
    else:
        s, e = _medium_windows(rng, n, horizon, params.alpha, params.beta)
        start, end = np.r_[0.0, s], np.r_[0.0, e]

    picked = params.n_grouped
    k = params.n_groups if params.n_groups is not None else sample_group_count(n, rng)
    k = min(k, picked)
    groups, shifts = [], []
    if k >= 1:
        chosen = rng.choice(np.arange(1, n + 1), size=picked, replace=False)
        groups = _split_groups(chosen, k)
        for members in groups:
            size = len(members)
            h = expected_tour_constant(size)
            if evaluation:
                s, e = np.zeros(size), np.full(size, h)
            else:
                s, e = _medium_windows(rng, size, h, params.alpha, params.beta)
            shift = float(rng.uniform(0.0, horizon))
            start[members] = s + shift
            end[members] = e + shift
            shifts.append(shift)
    meta = _meta(kind, params, seed, index=i, groups=groups, shifts=shifts)
    return DatasetRecord(f"{kind}-{seed}-{i:06d}", _make(coords, start, end), meta=meta)


def gen_hard_train(params: HardParams, count: int, seed: int, workers: int = 1) -> list[DatasetRecord]:
    """Medium windows, then ``floor(0.3 n)`` nodes regrouped, resampled at the
    group's own scale and shifted by a per-group offset."""
    if count < 1:
        raise ValueError("count must be >= 1")
    fn = partial(_hard_record, params=params, seed=seed, evaluation=False)
    return _map(fn, range(count), workers)


def gen_hard_eval(params: HardParams, count: int, seed: int, workers: int = 1) -> list[DatasetRecord]:
    """Like :func:`gen_hard_train` but with constant windows ``[0, T]`` in
    steps 1 and 3."""
    if count < 1:
        raise ValueError("count must be >= 1")
    fn = partial(_hard_record, params=params, seed=seed, evaluation=True)
    return _map(fn, range(count), workers)


def _weak_record(i, params, seed):
    coords, s, e = _one_medium(params, seed, "weak-no-start", i)
    s = np.zeros_like(s)
    return DatasetRecord(f"weak-no-start-{seed}-{i:06d}", _make(coords, s, e),
                         meta=_meta("weak-no-start", params, seed, index=i))


def gen_weak_no_start(n: int, count: int, seed: int, alpha: float = 0.5,
                      beta: float = 0.75, workers: int = 1) -> list[DatasetRecord]:
    """Medium instances with every window start set to 0."""
    if count < 1:
        raise ValueError("count must be >= 1")
    fn = partial(_weak_record, params=MediumParams(n, alpha, beta), seed=seed)
    return _map(fn, range(count), workers)


def _free_record(i, n, seed):
    rng = record_rng(seed, "unconstrained", i)
    coords = rng.uniform(0.0, 1.0, (n + 1, 2))
    zeros = np.zeros(n + 1)
    inst = Instance(coords, zeros, zeros, np.ones(n + 1, dtype=bool))
    return DatasetRecord(f"unconstrained-{seed}-{i:06d}", inst,
                         meta=_meta("unconstrained", {"n": n}, seed, index=i))


def gen_unconstrained(n: int, count: int, seed: int, workers: int = 1) -> list[DatasetRecord]:
    """Plain TSP instances: no window on either side."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return _map(partial(_free_record, n=n, seed=seed), range(count), workers)


def _grouped_record(i, params: MediumParams, seed: int, n_groups: int | None):
    rng = record_rng(seed, "grouped-medium", i)
    n = params.n
    coords = rng.uniform(0.0, 1.0, (n + 1, 2))
    k = n_groups if n_groups is not None else sample_group_count(n, rng)
    k = max(1, min(k, n))
    order = rng.permutation(np.arange(1, n + 1))
    groups = _split_groups(order, k)
    start, end = np.zeros(n + 1), np.zeros(n + 1)
    shift, shifts = 0.0, []
    for members in groups:
        # one group spanning every node uses the caller's horizon, i.e. plain Medium
        h = params.horizon if len(members) == n else expected_tour_constant(len(members))
        s, e = _medium_windows(rng, len(members), h, params.alpha, params.beta)
        start[members] = s + shift
        end[members] = e + shift
        shifts.append(shift)
        shift = float(end[members].max())
    meta = _meta("grouped-medium", params, seed, index=i, groups=groups, shifts=shifts)
    return DatasetRecord(f"grouped-medium-{seed}-{i:06d}", _make(coords, start, end), meta=meta)


def gen_grouped_medium(n: int, count: int, seed: int, n_groups: int | None = None,
                       alpha: float = 0.5, beta: float = 0.75,
                       workers: int = 1) -> list[DatasetRecord]:
    """All nodes split into groups whose windows are stacked end to end: group
    ``i`` is shifted by the latest deadline of group ``i - 1``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    fn = partial(_grouped_record, params=MediumParams(n, alpha, beta), seed=seed,
                 n_groups=n_groups)
    return _map(fn, range(count), workers)


def mix_training_corpus(medium: Sequence[DatasetRecord], hard: Sequence[DatasetRecord],
                        supplementary: Sequence[DatasetRecord], seed: int,
                        ratio: tuple[float, float, float] = (1, 1, 3)) -> list[DatasetRecord]:
    """Take the largest prefix of each pool that honours ``ratio`` and shuffle.

    A zero entry in ``ratio`` drops that pool entirely.
    """
    pools = [list(medium), list(hard), list(supplementary)]
    if any(r < 0 for r in ratio) or not any(r > 0 for r in ratio):
        raise ValueError("ratio needs non-negative entries, at least one positive")
    unit = min(len(p) / r for p, r in zip(pools, ratio) if r > 0)
    taken = []
    for p, r in zip(pools, ratio):
        taken.extend(p[: int(math.floor(unit * r + 1e-9))] if r > 0 else [])
    rng = np.random.default_rng([int(seed), zlib.crc32(b"mix")])
    return [taken[j] for j in rng.permutation(len(taken))]
