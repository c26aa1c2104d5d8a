"""Metrics, solver reports, weighted-score sweeps and dataset probes."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import Instance, check_legality, tour_length
from .datagen import DatasetRecord
from .expert import label_dataset
from .policy import construct_route, greedy_es, greedy_lt, greedy_mt, musla_adapt_solve
from .scorer import ScorerParams

# A solver maps a record to a tour, or to (tour, info) where info is a dict.
Solver = Callable[[DatasetRecord], object]


def gap(length: float, expert_length: float) -> float:
    if expert_length <= 0:
        raise ValueError("expert length must be positive")
    return length / expert_length - 1.0


@dataclass
class ReportRow:
    id: str
    legal: bool
    length: float
    total_timeout: float
    seconds: float
    gap: float | None = None
    info: dict = field(default_factory=dict)


@dataclass
class SolverReport:
    solver: str
    rows: list
    illegal_rate: float      # percent
    mean_gap: float | None   # percent, legal and labelled rows only
    mean_timeout: float
    time_per_1000: float     # seconds
    workers: int = 1

    @property
    def n_instances(self) -> int:
        return len(self.rows)

    def summary(self) -> dict:
        return {"solver": self.solver, "instances": self.n_instances,
                "illegal_rate": self.illegal_rate, "gap": self.mean_gap,
                "mean_timeout": self.mean_timeout, "time_per_1000": self.time_per_1000}


def aggregate(solver: str, rows: Sequence[ReportRow], workers: int = 1) -> SolverReport:
    if not rows:
        raise ValueError("cannot aggregate an empty report")
    illegal = 100.0 * sum(not r.legal for r in rows) / len(rows)
    gaps = [r.gap for r in rows if r.legal and r.gap is not None]
    mean_gap = 100.0 * float(np.mean(gaps)) if gaps else None
    timeout = float(np.mean([r.total_timeout for r in rows]))
    secs = sum(r.seconds for r in rows) / workers
    return SolverReport(solver, list(rows), illegal, mean_gap, timeout,
                        1000.0 * secs / len(rows), workers)


def evaluate(records: Sequence[DatasetRecord], solver: Solver, name: str = "solver") -> SolverReport:
    """Run ``solver`` on every record and collect legality, length and gap."""
    if not records:
        raise ValueError("empty evaluation corpus")
    rows = []
    for rec in records:
        t0 = time.perf_counter()
        out = solver(rec)
        secs = time.perf_counter() - t0
        tour, info = (out if isinstance(out, tuple) and len(out) == 2 and isinstance(out[1], dict)
                      else (out, {}))
        report = check_legality(rec.instance, tour)
        if report.reason == "not a permutation" or report.reason == "does not start at depot":
            length = float("nan")
        else:
            length = tour_length(rec.instance, tour)
        g = gap(length, rec.expert_length) if report.is_legal and rec.labeled else None
        rows.append(ReportRow(rec.id, report.is_legal, length, report.total_timeout, secs, g, info))
    return aggregate(name, rows)


def greedy_solver(rule: Callable[[Instance], tuple]) -> Solver:
    return lambda rec: rule(rec.instance)


def expert_solver(rec: DatasetRecord):
    if not rec.labeled:
        raise ValueError(f"record {rec.id} has no expert tour")
    return rec.expert_tour


def policy_solver(params: ScorerParams) -> Solver:
    return lambda rec: construct_route(rec.instance, params)[0]


def adapt_solver(params: ScorerParams, grid: Sequence[float] | None = None) -> Solver:
    def solve(rec):
        tour, _sched, eps = musla_adapt_solve(rec.instance, params, grid)
        return tour, {"epsilon": eps}
    return solve


GREEDY = {"greedy-mt": greedy_mt, "greedy-lt": greedy_lt, "greedy-es": greedy_es}


def weighted_score(illegal_pct: float, gap_pct: float, gamma: float) -> float:
    """``gamma * Illegal + (1 - gamma) * Gap``."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    return gamma * illegal_pct + (1.0 - gamma) * gap_pct


def reasonable_band(illegal_pct: float, gap_pct: float, low: float = 0.1, high: float = 10.0):
    """Gammas where ``gamma*Illegal / ((1-gamma)*Gap)`` lies in ``[low, high]``.

    ``None`` when either metric is zero, since the ratio is then degenerate.
    """
    if illegal_pct <= 0 or gap_pct <= 0:
        return None
    at = lambda r: r * gap_pct / (illegal_pct + r * gap_pct)
    return at(low), at(high)


def crossing_gamma(a: tuple[float, float], b: tuple[float, float]) -> float | None:
    """Gamma at which two ``(illegal, gap)`` solvers score equally, if in [0, 1]."""
    (i1, g1), (i2, g2) = a, b
    den = (i1 - i2) + (g2 - g1)
    if den == 0:
        return None
    gam = (g2 - g1) / den
    return gam if 0.0 <= gam <= 1.0 else None


@dataclass
class Sweep:
    rows: list     # (solver, gamma, score)
    bands: dict    # solver -> (low, high) or None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["solver", "gamma", "score"])
            w.writerows([s, repr(float(g)), repr(float(v))] for s, g, v in self.rows)

    def write_bands_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["solver", "gamma_low", "gamma_high"])
            for s, band in self.bands.items():
                w.writerow([s, *(band if band else ("", ""))])


def _metrics(rep) -> tuple[float, float]:
    if isinstance(rep, SolverReport):
        return rep.illegal_rate, rep.mean_gap or 0.0
    if isinstance(rep, Mapping):
        return float(rep["illegal_rate"]), float(rep.get("gap") or 0.0)
    i, g = rep
    return float(i), float(g)


def score_sweep(reports: Mapping[str, object], gammas: Sequence[float] | None = None) -> Sweep:
    """Score every solver over the gamma grid (default 0, 0.05, ..., 1)."""
    if gammas is None:
        gammas = np.linspace(0.0, 1.0, 21)
    rows, bands = [], {}
    for name, rep in reports.items():
        ill, gp = _metrics(rep)
        for gam in gammas:
            rows.append((name, float(gam), weighted_score(ill, gp, float(gam))))
        bands[name] = reasonable_band(ill, gp)
    return Sweep(rows, bands)


@dataclass
class ProbeReport:
    greedy: dict           # name -> SolverReport summary
    screened: int
    total: int
    too_easy: bool
    too_hard: bool

    @property
    def flags(self) -> list[str]:
        return [f for f, on in (("too easy", self.too_easy), ("too hard", self.too_hard)) if on]


def dataset_probe(records: Sequence[DatasetRecord], screened: int | None = None,
                  easy_pct: float = 1.0, hard_fraction: float = 0.5) -> ProbeReport:
    """Check whether a corpus separates learned solvers from trivial rules.

    Unlabelled records are labelled first and the infeasible ones counted as
    screened. The corpus is "too easy" when some greedy rule gets both illegal
    rate and gap at or below ``easy_pct`` percent, and "too hard" when more
    than ``hard_fraction`` of it had no legal tour.
    """
    records = list(records)
    if screened is None:
        unl = [r for r in records if not r.labeled]
        done, screened = label_dataset(unl) if unl else ([], 0)
        records = [r for r in records if r.labeled] + done
    total = len(records) + screened
    if total == 0:
        raise ValueError("empty corpus")
    summaries = {}
    too_easy = False
    if records:
        for name, rule in GREEDY.items():
            rep = evaluate(records, greedy_solver(rule), name)
            summaries[name] = rep.summary()
            g = rep.mean_gap if rep.mean_gap is not None else np.inf
            too_easy |= rep.illegal_rate <= easy_pct and g <= easy_pct
    return ProbeReport(summaries, screened, total, bool(too_easy), screened / total > hard_fraction)


def solution_derived_corpus(count: int, n: int, seed: int, half_width: float = 0.05) -> list[DatasetRecord]:
    """Probe fixture with windows built around a nearest-neighbour tour.

    Each node's window is ``[t' - u1, t' + u2]`` with ``u ~ U[0, half_width]``
    and ``t'`` the node's visit time on the nearest-neighbour route from the
    depot, which is the flawed construction such corpora use.
    """
    rng = np.random.default_rng([int(seed), 0xBADD])
    out = []
    for i in range(count):
        coords = rng.uniform(0.0, 1.0, (n + 1, 2))
        free = Instance(coords, np.zeros(n + 1), np.zeros(n + 1), np.ones(n + 1, dtype=bool))
        route = greedy_mt(free)  # nearest neighbour when nothing is constrained
        times = np.zeros(n + 1)
        t = 0.0
        for a, b in zip(route[:-1], route[1:]):
            t += free.dist[a, b]
            times[b] = t
        start = np.maximum(0.0, times - rng.uniform(0, half_width, n + 1))
        end = times + rng.uniform(0, half_width, n + 1)
        unc = np.zeros(n + 1, dtype=bool)
        unc[0] = True
        start[0] = end[0] = 0.0
        inst = Instance(coords, start, end, unc)
        out.append(DatasetRecord(f"solution-derived-{seed}-{i:06d}", inst,
                                 meta={"generator": "solution-derived", "seed": seed,
                                       "params": {"n": n, "half_width": half_width}, "index": i}))
    return out


def write_report(report: SolverReport, stem) -> dict:
    """Write ``<stem>.rows.csv``, ``<stem>.summary.csv`` and ``<stem>.json``."""
    stem = str(stem)
    with open(stem + ".rows.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "legal", "length", "total_timeout", "gap", "seconds", "epsilon"])
        for r in report.rows:
            w.writerow([r.id, int(r.legal), repr(r.length), repr(r.total_timeout),
                        "" if r.gap is None else repr(r.gap), f"{r.seconds:.6f}",
                        r.info.get("epsilon", "")])
    summary = report.summary()
    with open(stem + ".summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(summary))
        w.writerow(["" if v is None else v for v in summary.values()])
    eps = [r.info["epsilon"] for r in report.rows if "epsilon" in r.info]
    if eps:
        vals, counts = np.unique(eps, return_counts=True)
        summary["epsilon_histogram"] = {repr(float(v)): int(c) for v, c in zip(vals, counts)}
    with open(stem + ".json", "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def relabel_with(records: Sequence[DatasetRecord], tours: Mapping[str, tuple]) -> list[DatasetRecord]:
    """Attach given tours as labels; handy for self-comparison checks."""
    return [replace(r, expert_tour=tuple(tours[r.id]),
                    expert_length=tour_length(r.instance, tours[r.id])) for r in records]
