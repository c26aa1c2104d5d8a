"""Shared per-candidate feed-forward scorer and its supervised training.

Each candidate row (candidate features ++ context) passes through
``[Linear -> LayerNorm -> ReLU] * len(hidden)`` and a final linear unit that
yields one logit. A softmax over the candidates of one state gives the
probability of visiting each of them next; training minimises the negative
log-likelihood of the expert's choice.
"""
from __future__ import annotations

import logging
import copy
from dataclasses import dataclass, asdict, field
from typing import Sequence

import numpy as np

from .features import CONTEXT_DIM, LEVELS, ROW_DIMS, TrainingSample

log = logging.getLogger(__name__)

LN_EPS = 1e-5


class TrainingDivergedError(FloatingPointError):
    pass


@dataclass
class PolicyConfig:
    level: str = "osla"
    hidden: tuple = (128, 128, 128)
    lr: float = 1e-3
    weight_decay: float = 0.01
    batch_size: int = 256
    epochs: int = 100
    seed: int = 0
    k: int = 5
    m: int = 1
    patience: int = 5  # epochs without validation improvement before stopping

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"unknown level {self.level!r}")
        self.hidden = tuple(int(h) for h in self.hidden)
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("need at least one hidden layer of positive width")

    @property
    def input_dim(self) -> int:
        return ROW_DIMS[self.level] + CONTEXT_DIM


@dataclass
class ScorerParams:
    """Weights of the candidate scorer.

    ``in_mean``/``in_std`` standardise inputs and are fitted on the training
    rows, not learned. A ``musla`` scorer carries the one-step scorer it was
    trained with in ``lookahead``.
    """

    config: PolicyConfig
    weights: dict
    in_mean: np.ndarray
    in_std: np.ndarray
    lookahead: "ScorerParams | None" = None
    history: dict = field(default_factory=dict)

    @classmethod
    def init(cls, config: PolicyConfig, seed: int | None = None) -> "ScorerParams":
        rng = np.random.default_rng(config.seed if seed is None else seed)
        dims = (config.input_dim,) + config.hidden
        w = {}
        for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
            bound = 1.0 / np.sqrt(fan_in)
            w[f"W{i}"] = rng.uniform(-bound, bound, (fan_in, fan_out))
            w[f"b{i}"] = rng.uniform(-bound, bound, fan_out)
            w[f"g{i}"] = np.ones(fan_out)
            w[f"c{i}"] = np.zeros(fan_out)
        bound = 1.0 / np.sqrt(dims[-1])
        w["Wout"] = rng.uniform(-bound, bound, dims[-1])
        w["bout"] = np.zeros(1)
        d = config.input_dim
        return cls(config, w, np.zeros(d), np.ones(d))

    @classmethod
    def zeros(cls, config: PolicyConfig) -> "ScorerParams":
        p = cls.init(config)
        p.weights = {k: np.zeros_like(v) for k, v in p.weights.items()}
        return p

    @property
    def level(self) -> str:
        return self.config.level

    @property
    def n_layers(self) -> int:
        return len(self.config.hidden)

    def check(self) -> None:
        dims = (self.config.input_dim,) + self.config.hidden
        for i, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
            assert self.weights[f"W{i}"].shape == (a, b)
            for key in ("b", "g", "c"):
                assert self.weights[f"{key}{i}"].shape == (b,)
        assert self.weights["Wout"].shape == (dims[-1],)
        for v in self.weights.values():
            if not np.all(np.isfinite(v)):
                raise ValueError("non-finite scorer weights")

    def logits(self, rows: np.ndarray, context: np.ndarray) -> np.ndarray:
        return score_candidates(self, rows, context)


def _inputs(rows: np.ndarray, context: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(rows)
    ctx = np.broadcast_to(np.asarray(context, dtype=float), (len(rows), len(context)))
    return np.hstack([rows, ctx])


def forward(params: ScorerParams, x: np.ndarray, cache: bool = False):
    w = params.weights
    z = (x - params.in_mean) / params.in_std
    caches = []
    for i in range(params.n_layers):
        h = z @ w[f"W{i}"] + w[f"b{i}"]
        mu = h.mean(axis=1, keepdims=True)
        inv = 1.0 / np.sqrt(h.var(axis=1, keepdims=True) + LN_EPS)
        xhat = (h - mu) * inv
        y = xhat * w[f"g{i}"] + w[f"c{i}"]
        a = np.maximum(y, 0.0)
        if cache:
            caches.append((z, xhat, inv, y))
        z = a
    out = z @ w["Wout"] + w["bout"][0]
    if cache:
        return out, (caches, z)
    return out


def backward(params: ScorerParams, dout: np.ndarray, store) -> dict:
    w = params.weights
    caches, top = store
    grads = {"Wout": top.T @ dout, "bout": np.array([dout.sum()])}
    da = np.outer(dout, w["Wout"])
    for i in reversed(range(params.n_layers)):
        z, xhat, inv, y = caches[i]
        dy = da * (y > 0)
        grads[f"g{i}"] = (dy * xhat).sum(axis=0)
        grads[f"c{i}"] = dy.sum(axis=0)
        dx = dy * w[f"g{i}"]
        dh = inv * (dx - dx.mean(axis=1, keepdims=True)
                    - xhat * (dx * xhat).mean(axis=1, keepdims=True))
        grads[f"W{i}"] = z.T @ dh
        grads[f"b{i}"] = dh.sum(axis=0)
        da = dh @ w[f"W{i}"].T
    return grads


def score_candidates(params: ScorerParams, rows: np.ndarray, context: np.ndarray) -> np.ndarray:
    """One logit per candidate row; weights are shared across candidates."""
    return forward(params, _inputs(rows, context))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.exp(logits - np.max(logits))
    return z / z.sum()


@dataclass
class PackedSamples:
    """Training samples flattened into one input matrix with group offsets."""

    x: np.ndarray
    starts: np.ndarray  # first row of each sample
    sizes: np.ndarray
    targets: np.ndarray  # row offset of the expert choice inside its sample
    level: str

    @classmethod
    def pack(cls, samples: Sequence[TrainingSample]) -> "PackedSamples":
        if not samples:
            raise ValueError("no training samples")
        width = samples[0].rows.shape[1]
        if any(s.rows.shape[1] != width for s in samples):
            raise ValueError("samples mix feature levels")
        level = next((lv for lv, d in ROW_DIMS.items() if d == width), None)
        x = np.vstack([_inputs(s.rows, s.context) for s in samples])
        sizes = np.array([len(s.rows) for s in samples])
        starts = np.r_[0, np.cumsum(sizes)[:-1]]
        targets = np.array([s.target for s in samples])
        return cls(x, starts, sizes, targets, level)

    def __len__(self) -> int:
        return len(self.sizes)

    def batch(self, idx: np.ndarray):
        sizes = self.sizes[idx]
        rows = np.concatenate([np.arange(s, s + k) for s, k in zip(self.starts[idx], sizes)])
        starts = np.r_[0, np.cumsum(sizes)[:-1]]
        return self.x[rows], starts, sizes, self.targets[idx]


def group_nll(logits: np.ndarray, starts: np.ndarray, sizes: np.ndarray,
              targets: np.ndarray):
    """Mean negative log-likelihood of the targets and its gradient w.r.t. logits."""
    seg = np.repeat(np.arange(len(sizes)), sizes)
    mx = np.maximum.reduceat(logits, starts)
    e = np.exp(logits - mx[seg])
    tot = np.add.reduceat(e, starts)
    lse = mx + np.log(tot)
    picked = logits[starts + targets]
    loss = float(np.mean(lse - picked))
    grad = e / tot[seg]
    grad[starts + targets] -= 1.0
    return loss, grad / len(sizes)


def loss_and_grad(params: ScorerParams, x, starts, sizes, targets):
    out, store = forward(params, x, cache=True)
    loss, dout = group_nll(out, starts, sizes, targets)
    return loss, backward(params, dout, store)


def batch_loss(params: ScorerParams, x, starts, sizes, targets) -> float:
    return group_nll(forward(params, x), starts, sizes, targets)[0]


class AdamW:
    """Adam with decoupled weight decay on the weight matrices."""

    def __init__(self, params: ScorerParams, lr=1e-3, weight_decay=0.01,
                 betas=(0.9, 0.999), eps=1e-8):
        self.lr, self.wd, self.betas, self.eps = lr, weight_decay, betas, eps
        self.m = {k: np.zeros_like(v) for k, v in params.weights.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.weights.items()}
        self.t = 0

    def step(self, params: ScorerParams, grads: dict) -> None:
        self.t += 1
        b1, b2 = self.betas
        c1, c2 = 1 - b1 ** self.t, 1 - b2 ** self.t
        for k, p in params.weights.items():
            g = grads[k]
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
            if k.startswith("W"):
                p *= 1 - self.lr * self.wd
            p -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def fit_standardization(x: np.ndarray):
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std[std < 1e-8] = 1.0
    return mean, std


def train(samples: Sequence[TrainingSample] | PackedSamples, config: PolicyConfig,
          lookahead: ScorerParams | None = None,
          validation: Sequence[TrainingSample] | PackedSamples | None = None):
    """Fit a scorer to expert choices. Returns ``(params, per-epoch mean loss)``.

    With ``validation`` the weights from the epoch with the lowest validation
    loss are kept and training stops after ``config.patience`` epochs without
    improvement. Curves and the chosen epoch land in ``params.history``.
    """
    data = samples if isinstance(samples, PackedSamples) else PackedSamples.pack(samples)
    if data.x.shape[1] != config.input_dim:
        raise ValueError(f"samples have width {data.x.shape[1]}, "
                         f"{config.level} scorer expects {config.input_dim}")
    if config.level == "musla" and lookahead is None:
        raise ValueError("a musla scorer needs the one-step scorer used for its features")
    if validation is not None and not isinstance(validation, PackedSamples):
        validation = PackedSamples.pack(validation)
    rng = np.random.default_rng(config.seed)
    params = ScorerParams.init(config)
    params.in_mean, params.in_std = fit_standardization(data.x)
    params.lookahead = lookahead
    opt = AdamW(params, config.lr, config.weight_decay)
    losses, val_losses = [], []
    best = (np.inf, None, -1)
    for epoch in range(config.epochs):
        order = rng.permutation(len(data))
        total = 0.0
        for lo in range(0, len(order), config.batch_size):
            idx = order[lo: lo + config.batch_size]
            loss, grads = loss_and_grad(params, *data.batch(idx))
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch {lo // config.batch_size}; "
                    f"max |w| = {max(np.abs(v).max() for v in params.weights.values()):.3g}")
            opt.step(params, grads)
            total += loss * len(idx)
        losses.append(total / len(order))
        log.debug("epoch %d loss %.5f", epoch, losses[-1])
        if validation is not None:
            v = batch_loss(params, validation.x, validation.starts, validation.sizes,
                           validation.targets)
            val_losses.append(v)
            if v < best[0]:
                best = (v, copy.deepcopy(params.weights), epoch)
            elif epoch - best[2] >= config.patience:
                break
    history = {"train": losses}
    if validation is not None:
        params.weights = best[1]
        history.update(val=val_losses, best_epoch=best[2])
    params.history = history
    return params, losses


def accuracy(params: ScorerParams, data: PackedSamples) -> float:
    """Fraction of samples whose argmax candidate is the expert's choice."""
    out = forward(params, data.x)
    hits = 0
    for s, k, t in zip(data.starts, data.sizes, data.targets):
        hits += int(np.argmax(out[s: s + k]) == t)
    return hits / len(data)


def config_dict(config: PolicyConfig) -> dict:
    d = asdict(config)
    d["hidden"] = list(config.hidden)
    return d
