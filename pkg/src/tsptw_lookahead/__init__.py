"""Look-ahead features and imitation-learned route construction for the
travelling salesman problem with hard time windows."""
from .core import (Instance, LegalityReport, MalformedTourError, Point, Schedule, TimeWindow,
                   check_legality, distance, propagate, tour_length)
from .datagen import (DatasetRecord, HardParams, MediumParams, expected_tour_constant,
                      gen_grouped_medium, gen_hard_eval, gen_hard_train, gen_medium,
                      gen_unconstrained, gen_weak_no_start, mix_training_corpus)
from .expert import brute_force_solve, dp_solve, import_external_solutions, label_dataset
from .features import (build_training_samples, dynamic_features, musla_features,
                       osla_features, static_edge_features, static_node_features)
from .policy import construct_route, greedy_es, greedy_lt, greedy_mt, musla_adapt_solve
from .scorer import PolicyConfig, ScorerParams, score_candidates, train
from .evaluation import dataset_probe, evaluate, gap, score_sweep, weighted_score

__version__ = "0.1.0"
