import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tsptw_lookahead.core import Instance, propagate
from tsptw_lookahead.datagen import MediumParams, gen_medium
from tsptw_lookahead.expert import label_dataset
from tsptw_lookahead.features import (CONTEXT_DIM, ROW_DIMS, build_training_samples,
                                      context_vector, dynamic_features, musla_features,
                                      neighbor_count, osla_block, osla_features, state_features,
                                      static_edge_features, static_node_features, unvisited)
from tsptw_lookahead.scorer import PolicyConfig, ScorerParams

from conftest import instance_and_prefix, medium_instance
from oracles import naive_osla


@pytest.fixture(scope="module")
def osla_policy():
    return ScorerParams.init(PolicyConfig(level="osla", hidden=(16, 16)), seed=3)


def test_neighbor_count():
    assert [neighbor_count(n) for n in (1, 4, 5, 9, 10, 50)] == [1, 1, 2, 2, 3, 11]


def test_static_node_row():
    inst = Instance.build([[0.5, 0.5], [1.0, 0.5]], [(1.0, 2.0)])
    row = static_node_features(inst)[1]
    np.testing.assert_allclose(row, [1.0, 0.5, 1.0, 2.0, 0.5, 0.0, 0.5])


def test_edge_features_nearest_first():
    inst = medium_instance(9, 0)
    ef = static_edge_features(inst)
    assert ef.values.shape == (10, 2, 5)
    for i in range(10):
        assert i not in ef.neighbors[i]
        assert np.all(np.diff(ef.values[i, :, 0]) >= 0)
        others = np.delete(inst.dist[i], i)
        assert ef.values[i, 0, 0] == others.min()


def test_dynamic_by_hand():
    inst = Instance.build([[0, 0], [1, 0], [0, 2]], [(3.0, 5.0), (0.0, 4.0)])
    rows = dynamic_features(inst, [0], 0.0)
    np.testing.assert_allclose(rows[0], [1, 0, 1, 0, 1, 3, 3, 5, 3, 5, 3, 5])
    np.testing.assert_allclose(rows[1], [0, 2, 0, 2, 2, 2, 0, 4, 0, 4, 0, 4])


def test_osla_by_hand():
    # visit 1 at t=1, then 2 is at distance sqrt(2): arrival 2.414 > deadline 2
    inst = Instance.build([[0, 0], [1, 0], [0, 1]], [(0.0, 5.0), (0.0, 2.0)])
    f = osla_features(inst, [0], 1)
    np.testing.assert_allclose(f, [1, np.sqrt(2) - 1, np.sqrt(2) - 1, np.sqrt(2), np.sqrt(2), 1])
    np.testing.assert_allclose(osla_features(inst, [0, 2], 1), [0, 0, 0, 0, 0, 1])
    with pytest.raises(ValueError):
        osla_features(inst, [0, 1], 1)


@settings(max_examples=200, deadline=None)
@given(instance_and_prefix(max_n=10), st.data())
def test_osla_matches_naive_reference(case, data):
    inst, prefix = case
    rest = unvisited(inst, prefix)
    if len(rest) == 0:
        return
    c = int(data.draw(st.sampled_from(list(rest))))
    np.testing.assert_allclose(osla_features(inst, prefix, c), naive_osla(inst, prefix, c),
                               rtol=0, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(instance_and_prefix(max_n=10))
def test_osla_block_invariants(case):
    inst, prefix = case
    t = propagate(inst, prefix).end_time
    blk = osla_block(inst, prefix, t)
    if len(blk) == 0:
        return
    f1, f2, f3, f4, f5, f6 = blk.T
    assert set(np.unique(f1)) <= {0.0, 1.0}
    assert np.all((f1 == 0) == (f2 == 0)) and np.all((f2 == 0) == (f3 == 0))
    assert np.all(f2 <= f3 + 1e-12)
    assert np.all(f3 <= len(blk) * f2 + 1e-12)
    assert np.all(f5 >= f4 - 1e-12) and np.all(f4 >= 0)
    assert np.all(f6 == 1)


def test_context_vector():
    inst = medium_instance(8, 1)
    ctx = context_vector(inst, [0, 3], 1.7)
    assert ctx.shape == (CONTEXT_DIM,)
    assert ctx[7] == pytest.approx(1 / 8)
    assert ctx[8] == pytest.approx(1.7 / (0.5214 * 9))
    np.testing.assert_array_equal(ctx[9:], static_node_features(inst)[3])
    assert context_vector(inst, [0, 3], 1.7, level="static")[8] == 0.0


@pytest.mark.parametrize("level", ["static", "dynamic", "osla", "musla"])
def test_row_dims(level, osla_policy):
    inst = medium_instance(7, 2)
    cand, rows, ctx = state_features(inst, [0, 4], level, 1.0, osla_policy)
    assert rows.shape == (6, ROW_DIMS[level])
    assert ctx.shape == (CONTEXT_DIM,)


def test_unknown_level():
    with pytest.raises(ValueError):
        state_features(medium_instance(4, 0), [0], "deep", 0.0)


def test_musla_m0_equals_osla(osla_policy):
    inst = medium_instance(9, 4)
    prefix = [0, 5, 2]
    t = propagate(inst, prefix).end_time
    block, mask = musla_features(inst, prefix, osla_policy, k=3, m=0)
    assert mask.sum() == 3
    np.testing.assert_allclose(block[mask], osla_block(inst, prefix, t)[mask])
    assert np.all(block[~mask] == 0)


def test_musla_extension_by_hand(osla_policy):
    inst = medium_instance(8, 6)
    prefix = [0, 1]
    block, mask = musla_features(inst, prefix, osla_policy, k=2, m=2)
    cand = unvisited(inst, prefix)
    for j in np.flatnonzero(mask):
        route = prefix + [int(cand[j])]
        for _ in range(2):
            rest = unvisited(inst, route)
            _, rows, ctx = state_features(inst, route, "osla", propagate(inst, route).end_time)
            route.append(int(rest[np.argmax(osla_policy.logits(rows, ctx))]))
        np.testing.assert_allclose(block[j], naive_osla(inst, route[:-1], route[-1]), atol=1e-12)


def test_musla_zero_rows_near_the_end(osla_policy):
    inst = medium_instance(4, 1)
    block, mask = musla_features(inst, [0, 1, 2], osla_policy, k=5, m=2)
    assert not mask.any() and np.all(block == 0)


def test_musla_validation(osla_policy):
    with pytest.raises(ValueError):
        musla_features(medium_instance(4, 1), [0], osla_policy, k=0)


def test_training_samples_follow_expert():
    rec = label_dataset(gen_medium(MediumParams(6), 1, 3))[0][0]
    samples = build_training_samples(rec, "osla")
    assert len(samples) == 6
    assert [s.expert_node for s in samples] == list(rec.expert_tour[1:])
    assert [len(s.candidates) for s in samples] == [6, 5, 4, 3, 2, 1]
    with pytest.raises(ValueError):
        build_training_samples(rec, "musla")
    with pytest.raises(ValueError):
        build_training_samples(gen_medium(MediumParams(6), 1, 3)[0], "osla")
