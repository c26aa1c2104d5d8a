"""
Instances, schedules and the exact expert
=========================================

A walk through one small instance: how windows are sampled, how a tour is
timed with the waiting rule, and how far the greedy rules are from optimal.
"""

import numpy as np

from tsptw_lookahead.core import check_legality, propagate
from tsptw_lookahead.datagen import MediumParams, expected_tour_constant, gen_medium
from tsptw_lookahead.expert import dp_solve
from tsptw_lookahead.policy import greedy_es, greedy_lt, greedy_mt

np.set_printoptions(precision=3, suppress=True)

# one Medium instance with 9 customers; T_n is the sampling scale
rec = gen_medium(MediumParams(9), count=1, seed=0)[0]
inst = rec.instance
print("T_n =", expected_tour_constant(inst.n))
print("windows:\n", np.column_stack([inst.tw_start, inst.deadline]))

# timing a tour: arrive early and you wait for the window to open
tour = greedy_mt(inst)
sched = propagate(inst, tour)
print("greedy-mt tour", tour)
print("visit times", sched.visit_times)
print("waits      ", sched.waits)
print("lateness   ", sched.lateness)

# the expert keeps Pareto (length, arrival) labels per (visited set, last node)
best, best_len = dp_solve(inst)
print("expert tour", best, "length %.4f" % best_len)

for name, rule in (("mt", greedy_mt), ("lt", greedy_lt), ("es", greedy_es)):
    t = rule(inst)
    rep = check_legality(inst, t)
    length = propagate(inst, t).total_length
    print(f"greedy-{name}: legal={rep.is_legal} timeout={rep.total_timeout:.3f} "
          f"gap={length / best_len - 1:+.1%}")
