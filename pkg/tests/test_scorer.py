import numpy as np
import pytest

from tsptw_lookahead.datagen import MediumParams, gen_medium
from tsptw_lookahead.expert import label_dataset
from tsptw_lookahead.pipeline import pack_records
from tsptw_lookahead.scorer import (AdamW, PackedSamples, PolicyConfig, ScorerParams, accuracy,
                                    fit_standardization, group_nll, loss_and_grad,
                                    score_candidates, softmax, train)

from gradcheck import relative_errors


@pytest.fixture(scope="module")
def records():
    return label_dataset(gen_medium(MediumParams(7), 40, 5))[0]


@pytest.fixture(scope="module")
def packed(records):
    return pack_records(records, "dynamic")


def test_config_validation():
    with pytest.raises(ValueError):
        PolicyConfig(level="deep")
    with pytest.raises(ValueError):
        PolicyConfig(hidden=())
    assert PolicyConfig(level="static").input_dim == 12 + 16


def test_init_shapes_and_bounds():
    cfg = PolicyConfig(level="osla", hidden=(8, 4))
    p = ScorerParams.init(cfg, seed=1)
    p.check()
    assert np.abs(p.weights["W0"]).max() <= 1 / np.sqrt(cfg.input_dim)
    q = ScorerParams.init(cfg, seed=1)
    np.testing.assert_array_equal(p.weights["W1"], q.weights["W1"])


def test_group_nll_matches_naive():
    rng = np.random.default_rng(0)
    sizes = np.array([3, 1, 4])
    starts = np.r_[0, np.cumsum(sizes)[:-1]]
    targets = np.array([2, 0, 1])
    logits = rng.normal(size=sizes.sum())
    loss, grad = group_nll(logits, starts, sizes, targets)
    ref = np.mean([-np.log(softmax(logits[s:s + k])[t]) for s, k, t in zip(starts, sizes, targets)])
    assert loss == pytest.approx(ref, rel=1e-12)
    for s, k, t in zip(starts, sizes, targets):
        g = softmax(logits[s:s + k])
        g[t] -= 1
        np.testing.assert_allclose(grad[s:s + k], g / 3, atol=1e-15)


def test_gradients_match_finite_differences(packed):
    cfg = PolicyConfig(level="dynamic", hidden=(32, 32, 32))
    p = ScorerParams.init(cfg, seed=2)
    p.in_mean, p.in_std = fit_standardization(packed.x)
    errs = relative_errors(p, packed, np.random.default_rng(0))
    assert len(errs) >= 30 and errs.max() < 1e-4


def test_output_bias_has_no_gradient(packed):
    p = ScorerParams.init(PolicyConfig(level="dynamic", hidden=(16,)), seed=0)
    _, grads = loss_and_grad(p, *packed.batch(np.arange(10)))
    assert abs(grads["bout"][0]) < 1e-12


def test_adamw_decays_only_matrices():
    p = ScorerParams.zeros(PolicyConfig(level="static", hidden=(4,)))
    p.weights["W0"][:] = 1.0
    p.weights["g0"][:] = 1.0
    opt = AdamW(p, lr=0.1, weight_decay=0.5)
    opt.step(p, {k: np.zeros_like(v) for k, v in p.weights.items()})
    assert np.allclose(p.weights["W0"], 0.95) and np.allclose(p.weights["g0"], 1.0)


def test_training_reduces_loss_and_is_reproducible(packed):
    cfg = PolicyConfig(level="dynamic", hidden=(32, 32), epochs=8, batch_size=32, seed=4)
    p1, l1 = train(packed, cfg)
    p2, l2 = train(packed, cfg)
    assert l1[-1] < l1[0]
    assert l1 == l2
    np.testing.assert_array_equal(p1.weights["W0"], p2.weights["W0"])
    assert accuracy(p1, packed) > 0.3


def test_early_stopping_restores_best(records):
    fit, val = pack_records(records[:30], "static"), pack_records(records[30:], "static")
    cfg = PolicyConfig(level="static", hidden=(16,), epochs=40, patience=2, batch_size=16)
    p, losses = train(fit, cfg, validation=val)
    h = p.history
    assert len(h["val"]) == len(losses) <= 40
    assert h["best_epoch"] == int(np.argmin(h["val"]))


def test_train_rejects_wrong_width(packed):
    with pytest.raises(ValueError):
        train(packed, PolicyConfig(level="osla", epochs=1))
    cfg = PolicyConfig(level="musla", epochs=1)
    wide = PackedSamples(np.zeros((3, cfg.input_dim)), np.array([0]), np.array([3]),
                         np.array([0]), "musla")
    with pytest.raises(ValueError, match="one-step scorer"):
        train(wide, cfg)


def test_logits_positive_scaling_keeps_argmax(packed):
    p = ScorerParams.init(PolicyConfig(level="dynamic", hidden=(8,)), seed=0)
    s = score_candidates(p, packed.x[:5, :24], packed.x[0, 24:])
    assert s.shape == (5,)
    assert np.argmax(s) == np.argmax(3.0 * s)
