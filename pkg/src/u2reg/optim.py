"""Adam optimizer and the mini-batch training loop.

All randomness (shuffles, dropout) is derived from the config seed through
labeled streams, so a run is reproducible from (data, init theta, config)
alone. Early stopping watches mean absolute error against the observed
validation labels and restores the best parameters seen.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .gradients import (
    GradResult,
    lu_batch_gradient,
    naive_batch_gradient,
    u2_batch_gradient,
)
from .losses import LossKind, LossSpec
from .rngutil import derive_rng

METHODS = ("u2", "lu", "naive")


@dataclass(frozen=True)
class AdamParams:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not (0.0 <= self.beta1 < 1.0) or not (0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int


def adam_init(n_params: int) -> AdamState:
    return AdamState(np.zeros(n_params), np.zeros(n_params), 0)


def adam_step(state: AdamState, grad: np.ndarray, params: AdamParams) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected Adam update; returns (new state, theta delta)."""
    t = state.t + 1
    m = params.beta1 * state.m + (1.0 - params.beta1) * grad
    v = params.beta2 * state.v + (1.0 - params.beta2) * grad * grad
    m_hat = m / (1.0 - params.beta1**t)
    v_hat = v / (1.0 - params.beta2**t)
    delta = -params.lr * m_hat / (np.sqrt(v_hat) + params.eps)
    return AdamState(m, v, t), delta


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    """Method, loss, penalty and loop settings for one training run.

    method "u2" and "lu" need a two-sided LossSpec and use rho; "naive"
    needs a single naive_kind and ignores rho.
    """

    method: str
    spec: LossSpec | None = None
    naive_kind: LossKind | None = None
    rho: float = 1.0
    lam: float = 0.0
    reg: str | None = "l2"
    adam: AdamParams = field(default_factory=AdamParams)
    batch_size: int = 32
    max_epochs: int = 500
    patience: int = 20
    shuffle: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.method in ("u2", "lu") and self.spec is None:
            raise ValueError(f"method {self.method!r} needs a LossSpec")
        if self.method == "naive" and self.naive_kind is None:
            raise ValueError("method 'naive' needs a naive_kind")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be nonnegative")
        if self.patience < 0:
            raise ValueError("patience must be nonnegative")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    val_mae: float
    grad_norm: float
    seconds: float


@dataclass
class TrainResult:
    model: object
    history: list[EpochRecord]
    best_epoch: int
    best_val_mae: float
    stopped_early: bool


def _batch_grad(model, xs, ys, cfg: TrainConfig, rng) -> GradResult:
    if cfg.method == "u2":
        return u2_batch_gradient(model, xs, ys, cfg.spec, cfg.rho, cfg.lam, cfg.reg, rng)
    if cfg.method == "lu":
        return lu_batch_gradient(model, xs, ys, cfg.spec, cfg.rho, cfg.lam, cfg.reg, rng)
    return naive_batch_gradient(model, xs, ys, cfg.naive_kind, cfg.lam, cfg.reg, rng)


def train(model, train_ds, val_ds, cfg: TrainConfig, step_callback=None) -> TrainResult:
    """Mini-batch Adam with patience-based early stopping.

    The caller's model is never mutated; the result carries a copy holding
    the best-validation parameters. step_callback, when given, is invoked as
    step_callback(global_step, model, grad_result) after each update.
    """
    if len(train_ds) < 1:
        raise ValueError("training split must be nonempty")
    if len(val_ds) < 1:
        raise ValueError("validation split must be nonempty")
    if cfg.batch_size > len(train_ds):
        raise ValueError(
            f"batch_size {cfg.batch_size} exceeds the training set size {len(train_ds)}"
        )
    model = model.clone_with_theta(model.theta)
    n = len(train_ds)
    state = adam_init(model.theta.size)
    best_theta = model.theta.copy()
    best_val = _val_mae(model, val_ds)
    best_epoch = -1
    since_best = 0
    history: list[EpochRecord] = []
    stopped_early = False
    t0 = time.perf_counter()
    global_step = 0

    for epoch in range(cfg.max_epochs):
        if cfg.shuffle:
            order = derive_rng(cfg.seed, "shuffle", epoch).permutation(n)
        else:
            order = np.arange(n)
        norms = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            rng = derive_rng(cfg.seed, "dropout", global_step)
            res = _batch_grad(model, train_ds.xs[idx], train_ds.ys_prime[idx], cfg, rng)
            if not np.all(np.isfinite(res.grad)):
                raise FloatingPointError(
                    f"non-finite gradient at epoch {epoch}, step {global_step}"
                )
            state, delta = adam_step(state, res.grad, cfg.adam)
            model.theta = model.theta + delta
            norms.append(float(np.linalg.norm(res.grad)))
            if step_callback is not None:
                step_callback(global_step, model, res)
            global_step += 1
        val_mae = _val_mae(model, val_ds)
        history.append(EpochRecord(epoch, val_mae, float(np.mean(norms)),
                                   time.perf_counter() - t0))
        if val_mae < best_val:
            best_val = val_mae
            best_theta = model.theta.copy()
            best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                stopped_early = True
                break

    return TrainResult(
        model=model.clone_with_theta(best_theta),
        history=history,
        best_epoch=best_epoch,
        best_val_mae=best_val,
        stopped_early=stopped_early,
    )


def _val_mae(model, val_ds) -> float:
    preds = model.predict_batch(val_ds.xs)
    return float(np.mean(np.abs(preds - val_ds.ys_prime)))
