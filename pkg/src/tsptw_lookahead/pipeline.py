"""End-to-end helpers: build samples, train each feature level, run the
ablation ladder."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

from .datagen import DatasetRecord
from .evaluation import SolverReport, adapt_solver, evaluate, policy_solver
from .features import build_training_samples
from .scorer import PackedSamples, PolicyConfig, ScorerParams, train

log = logging.getLogger(__name__)

ABLATION_LEVELS = ("static", "dynamic", "osla", "musla")


def pack_records(records: Sequence[DatasetRecord], level: str,
                 lookahead: ScorerParams | None = None, k: int = 5, m: int = 1) -> PackedSamples:
    samples = [s for r in records for s in build_training_samples(r, level, lookahead, k, m)]
    return PackedSamples.pack(samples)


def fit_level(train_records: Sequence[DatasetRecord], config: PolicyConfig,
              lookahead: ScorerParams | None = None,
              val_records: Sequence[DatasetRecord] | None = None) -> ScorerParams:
    """Build samples at ``config.level`` and train a scorer on them."""
    data = pack_records(train_records, config.level, lookahead, config.k, config.m)
    val = (pack_records(val_records, config.level, lookahead, config.k, config.m)
           if val_records else None)
    params, losses = train(data, config, lookahead=lookahead, validation=val)
    log.info("%s: %d samples, %d epochs, final loss %.4f", config.level, len(data),
             len(losses), losses[-1])
    return params


@dataclass
class AblationResult:
    policies: dict   # level -> ScorerParams
    reports: dict    # solver name -> SolverReport

    def illegal(self, name: str) -> float:
        return self.reports[name].illegal_rate


def run_ablation(train_records: Sequence[DatasetRecord], test_records: Sequence[DatasetRecord],
                 base: PolicyConfig | None = None, val_fraction: float = 0.1,
                 levels: Sequence[str] = ABLATION_LEVELS, adapt: bool = True,
                 grid: Sequence[float] | None = None) -> AblationResult:
    """Train one scorer per level and evaluate all of them on ``test_records``.

    The last ``val_fraction`` of ``train_records`` is held out for early
    stopping. The musla level reuses the trained osla scorer for its features,
    and ``musla-adapt`` sweeps time offsets with the musla scorer.
    """
    base = base or PolicyConfig(epochs=30)
    n_val = int(round(val_fraction * len(train_records)))
    fit_recs = list(train_records[: len(train_records) - n_val])
    val_recs = list(train_records[len(train_records) - n_val:]) or None
    policies: dict = {}
    reports: dict = {}
    for level in levels:
        lookahead = None
        if level == "musla":
            if "osla" not in policies:
                policies["osla"] = fit_level(fit_recs, replace(base, level="osla"), None, val_recs)
            lookahead = policies["osla"]
        if level not in policies:
            policies[level] = fit_level(fit_recs, replace(base, level=level), lookahead, val_recs)
        reports[level] = evaluate(test_records, policy_solver(policies[level]), level)
        log.info("%s: illegal %.1f%% gap %s", level, reports[level].illegal_rate,
                 reports[level].mean_gap)
    if adapt and "musla" in policies:
        reports["musla-adapt"] = evaluate(test_records, adapt_solver(policies["musla"], grid),
                                          "musla-adapt")
    return AblationResult(policies, reports)


def summary_table(reports: dict) -> str:
    lines = [f"{'solver':<14}{'illegal%':>10}{'gap%':>10}{'timeout':>10}{'s/1000':>10}"]
    for name, rep in reports.items():
        rep: SolverReport
        g = "-" if rep.mean_gap is None else f"{rep.mean_gap:.2f}"
        lines.append(f"{name:<14}{rep.illegal_rate:>10.2f}{g:>10}{rep.mean_timeout:>10.3f}"
                     f"{rep.time_per_1000:>10.2f}")
    return "\n".join(lines)
