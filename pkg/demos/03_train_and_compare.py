"""
Training the scorer at each feature level
=========================================

A scaled-down version of the acceptance ablation: label a corpus with the
exact solver, train one scorer per feature level and compare illegal rates.
Takes a couple of minutes on one core.
"""

import logging

from tsptw_lookahead.datagen import MediumParams, gen_medium
from tsptw_lookahead.evaluation import GREEDY, evaluate, greedy_solver
from tsptw_lookahead.expert import label_dataset
from tsptw_lookahead.pipeline import run_ablation, summary_table
from tsptw_lookahead.scorer import PolicyConfig

logging.basicConfig(level=logging.INFO, format="%(message)s")

records, screened = label_dataset(gen_medium(MediumParams(10), 800, seed=11))
print(f"{len(records)} labelled, {screened} without a legal tour")
train, test = records[:600], records[600:]

result = run_ablation(train, test, PolicyConfig(epochs=20, seed=0))
for name, rule in GREEDY.items():
    result.reports[name] = evaluate(test, greedy_solver(rule), name)
print(summary_table(result.reports))

osla = result.policies["osla"]
print("osla early stopping picked epoch", osla.history["best_epoch"],
      "of", len(osla.history["train"]))
