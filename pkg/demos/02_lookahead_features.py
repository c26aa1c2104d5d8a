"""
What the look-ahead features see
================================

Builds the per-candidate rows at each feature level for a mid-route state and
shows how one-step look-ahead flags candidates that doom another node.
"""

import numpy as np

from tsptw_lookahead.core import propagate
from tsptw_lookahead.datagen import MediumParams, gen_medium
from tsptw_lookahead.expert import dp_solve
from tsptw_lookahead.features import ROW_DIMS, musla_features, osla_block, state_features
from tsptw_lookahead.scorer import PolicyConfig, ScorerParams

np.set_printoptions(precision=3, suppress=True, linewidth=120)

inst = gen_medium(MediumParams(10), count=1, seed=3)[0].instance
tour, _ = dp_solve(inst)
prefix = list(tour[:4])
t_now = propagate(inst, prefix).end_time
print("state: route", prefix, "time %.3f" % t_now)

for level in ("static", "dynamic", "osla"):
    cand, rows, ctx = state_features(inst, prefix, level, t_now)
    print(f"{level:>8}: {rows.shape[0]} candidates x {rows.shape[1]} features "
          f"(expected {ROW_DIMS[level]}), context {ctx.shape[0]}")

# f1..f3: does visiting the candidate make some other deadline unreachable
cand = state_features(inst, prefix, "osla", t_now)[0]
blk = osla_block(inst, prefix, t_now)
print("candidate  f1  f2(max late)  f3(sum late)  f4(next dist)  f5(next cost)")
for c, row in zip(cand, blk):
    print(f"{c:>9} {row[0]:>3.0f} {row[1]:>13.3f} {row[2]:>13.3f} {row[3]:>14.3f} {row[4]:>14.3f}")
print("expert goes to", tour[4])

# multi-step rows roll the route forward with a one-step scorer; an untrained
# one is enough to show the mechanics
osla = ScorerParams.init(PolicyConfig(level="osla", hidden=(32, 32)), seed=0)
block, mask = musla_features(inst, prefix, osla, k=3, m=2, t_now=t_now)
print("rolled out for candidates", cand[mask])
print(block[mask])
