"""
Trading legality against length
===============================

The weighted score ``gamma * Illegal + (1 - gamma) * Gap`` ranks solvers that
disagree on the two metrics. This demo sweeps gamma for a few made-up solver
profiles, finds where they cross, and runs the dataset probe on a corpus
whose windows were cut around a nearest-neighbour tour.
"""

import numpy as np

from tsptw_lookahead.datagen import MediumParams, gen_medium
from tsptw_lookahead.evaluation import (crossing_gamma, dataset_probe, reasonable_band,
                                        score_sweep, solution_derived_corpus)

profiles = {"careful": (0.5, 12.0), "greedy": (20.0, 3.0), "balanced": (6.0, 7.0)}
sweep = score_sweep(profiles, np.linspace(0, 1, 5))
for name, gamma, score in sweep.rows:
    print(f"{name:>9} gamma={gamma:.2f} S={score:6.2f}")

print("careful vs greedy cross at gamma =",
      crossing_gamma(profiles["careful"], profiles["greedy"]))
for name, (ill, g) in profiles.items():
    lo, hi = reasonable_band(ill, g)
    print(f"{name:>9}: both terms within 10x of each other for gamma in [{lo:.3f}, {hi:.3f}]")

# a corpus whose windows hug a nearest-neighbour route is solved by greedy-mt
easy = dataset_probe(solution_derived_corpus(60, 10, seed=0))
print("solution-derived corpus:", easy.flags, easy.greedy["greedy-mt"])
medium = dataset_probe(gen_medium(MediumParams(10), 60, seed=0))
print("medium corpus:", medium.flags or "no flags", medium.greedy["greedy-mt"])
