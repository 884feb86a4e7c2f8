"""Corrected mini-batch gradients and their bias diagnostics.

The key move: when labels can only be corrupted downward, every row whose
prediction sits at or below its label is trustworthy for the upper side of
the loss, while the lower side's derivative is a known constant c_g that
needs no label at all. The corrected batch gradient therefore keeps the
labeled upper-side term on trustworthy rows and rebuilds the lower-side term
from the whole batch, reweighted by rho, the assumed odds that a fresh point
lands below the regression function:

    g = sum_up dL_up(f_i, y_i) J_i
        + rho * c_g * sum_batch J_i
        - c_g * sum_up J_i
        + lam * dR(theta)

where J_i = d f(x_i) / d theta. The sums are deliberately unnormalized; the
learning rate and rho absorb the scale, and Adam's update is invariant to
it anyway. Collapsing the three sums gives one weight per row, so a single
weighted backward pass computes the whole thing:

    coeff_i = 1[up_i] * (dL_up(f_i, y_i) - c_g) + rho * c_g.

The mirrored variant for upward-only corruption swaps the roles of the two
sides. Rows with f_i == y_i belong to the upper side in both variants: they
are trustworthy for the downward-corruption form and unlabeled-only for the
mirror.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import (
    LossKind,
    LossSpec,
    dloss_df,
    lower_grad_coeff,
    plain_dloss_df,
    upper_grad_coeff,
)

REGULARIZERS = ("l1", "l2")


def reg_value(reg: str | None, theta: np.ndarray) -> float:
    if reg is None:
        return 0.0
    if reg == "l1":
        return float(np.abs(theta).sum())
    if reg == "l2":
        return float((theta * theta).sum())
    raise ValueError(f"regularizer must be one of {REGULARIZERS}, got {reg!r}")


def reg_grad(reg: str | None, theta: np.ndarray) -> np.ndarray:
    if reg is None:
        return np.zeros_like(theta)
    if reg == "l1":
        return np.sign(theta)
    if reg == "l2":
        return 2.0 * theta
    raise ValueError(f"regularizer must be one of {REGULARIZERS}, got {reg!r}")


def partition_upper(preds: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """True where the prediction is at or below the label (ties trusted)."""
    return np.asarray(preds) <= np.asarray(ys)


@dataclass
class GradResult:
    grad: np.ndarray
    preds: np.ndarray
    trusted: np.ndarray  # boolean mask of rows whose labels were used


def _check_rho_lam(rho: float, lam: float) -> None:
    if rho < 0.0:
        raise ValueError("rho must be nonnegative")
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")


def u2_batch_gradient(
    model,
    xs: np.ndarray,
    ys: np.ndarray,
    spec: LossSpec,
    rho: float,
    lam: float = 0.0,
    reg: str | None = "l2",
    rng=None,
) -> GradResult:
    """Corrected gradient for downward-only label corruption.

    Unnormalized sums over the batch, per the module docstring; rng enables
    train-mode stochasticity (dropout) in the forward pass, and the row
    partition uses that same forward pass.
    """
    _check_rho_lam(rho, lam)
    ys = np.asarray(ys, dtype=float)
    c_g = lower_grad_coeff(spec)
    preds, cache = model.forward_train(xs, rng)
    up = partition_upper(preds, ys)
    coeff = np.where(up, dloss_df(spec, preds, ys, "upper") - c_g, 0.0) + rho * c_g
    grad = model.backward_weighted(cache, coeff)
    if lam > 0.0:
        grad = grad + lam * reg_grad(reg, model.theta)
    return GradResult(grad, preds, up)


def lu_batch_gradient(
    model,
    xs: np.ndarray,
    ys: np.ndarray,
    spec: LossSpec,
    rho: float,
    lam: float = 0.0,
    reg: str | None = "l2",
    rng=None,
) -> GradResult:
    """Mirror of u2_batch_gradient for upward-only label corruption.

    Rows with y_i < f_i keep the labeled lower-side term (ties f_i == y_i are
    treated as upper and dropped from it); the upper side is rebuilt from the
    constant c_u = d/df L_up on f < y, reweighted by rho, the assumed odds
    that a fresh point lands above the regression function. Unnormalized
    sums, exactly like u2_batch_gradient.
    """
    _check_rho_lam(rho, lam)
    ys = np.asarray(ys, dtype=float)
    c_u = upper_grad_coeff(spec)
    preds, cache = model.forward_train(xs, rng)
    lo = ys < np.asarray(preds)
    coeff = np.where(lo, dloss_df(spec, preds, ys, "lower") - c_u, 0.0) + rho * c_u
    grad = model.backward_weighted(cache, coeff)
    if lam > 0.0:
        grad = grad + lam * reg_grad(reg, model.theta)
    return GradResult(grad, preds, lo)


def naive_batch_gradient(
    model,
    xs: np.ndarray,
    ys: np.ndarray,
    kind: LossKind,
    lam: float = 0.0,
    reg: str | None = "l2",
    rng=None,
) -> GradResult:
    """Plain mean gradient of a single-kind loss; trusts every label."""
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    ys = np.asarray(ys, dtype=float)
    preds, cache = model.forward_train(xs, rng)
    coeff = plain_dloss_df(kind, preds, ys)
    grad = model.backward_weighted(cache, coeff / ys.size)
    if lam > 0.0:
        grad = grad + lam * reg_grad(reg, model.theta)
    return GradResult(grad, preds, np.ones(ys.size, dtype=bool))


# ---------------------------------------------------------------------------
# estimators and oracles over whole datasets (no regularizer, no dropout)
# ---------------------------------------------------------------------------

def u2_dataset_gradient_estimate(
    model,
    xs: np.ndarray,
    ys: np.ndarray,
    spec: LossSpec,
    pi_up: float,
) -> GradResult:
    """Importance-normalized corrected gradient over a full dataset.

    pi_up is the probability that a clean draw satisfies f(x) <= y. The
    trustworthy rows are reweighted by pi_up / n_up so their average matches
    the clean upper-side expectation, and the constant lower-side term is a
    plain mean over all rows:

        (pi_up / n_up) sum_up [dL_up(f_i, y_i) - c_g] J_i
        + (1 / N) c_g sum_all J_i.

    Degenerate batches with no trustworthy rows fall back to the second term
    alone (the first is an empty sum).
    """
    if not (0.0 < pi_up <= 1.0):
        raise ValueError("pi_up must lie in (0, 1]")
    ys = np.asarray(ys, dtype=float)
    c_g = lower_grad_coeff(spec)
    preds, cache = model.forward_train(xs, None)
    up = partition_upper(preds, ys)
    n_up = int(up.sum())
    coeff = np.full(ys.size, c_g / ys.size)
    if n_up > 0:
        d_up = dloss_df(spec, preds, ys, "upper")
        coeff = coeff + np.where(up, (d_up - c_g) * (pi_up / n_up), 0.0)
    return GradResult(model.backward_weighted(cache, coeff), preds, up)


def population_gradient_oracle(
    model,
    process,
    spec: LossSpec,
    n_rows: int,
    seed: int,
    with_se: bool = False,
):
    """Monte-Carlo E[dL(f(x), y) J(x)] under the clean label process.

    The loss is the full two-sided objective: upper kind where f <= y, lower
    kind where f > y. Fresh clean rows come from process.draw_clean, so this
    never sees corruption; it is the ground truth the corrected estimators
    are judged against. Returns grad, or (grad, se) with per-coordinate
    standard errors of the Monte-Carlo mean.
    """
    from .rngutil import derive_rng

    if n_rows < 2:
        raise ValueError("need at least two Monte-Carlo rows")
    X, y = process.draw_clean(n_rows, derive_rng(seed, "population-oracle"))
    preds, cache = model.forward_train(X, None)
    up = partition_upper(preds, y)
    coeff = np.where(up, dloss_df(spec, preds, y, "upper"),
                     dloss_df(spec, preds, y, "lower"))
    grad = model.backward_weighted(cache, coeff / n_rows)
    if not with_se:
        return grad
    se = _per_coordinate_se(model, X, coeff, grad)
    return grad, se


def _per_coordinate_se(model, X, coeff, mean_grad) -> np.ndarray:
    """Standard error of the mean per-row gradient, coordinatewise."""
    n_rows = coeff.size
    sq = np.zeros_like(mean_grad)
    if hasattr(model, "param_jacobian_batch"):
        chunk = 65536
        for start in range(0, n_rows, chunk):
            stop = min(start + chunk, n_rows)
            G = coeff[start:stop, None] * model.param_jacobian_batch(X[start:stop])
            sq += (G * G).sum(axis=0)
    else:
        for i in range(n_rows):
            g_i = model.backward_weighted(
                model.forward_train(X[i : i + 1], None)[1],
                np.array([coeff[i]]),
            )
            sq += g_i * g_i
    var = sq / n_rows - mean_grad * mean_grad
    return np.sqrt(np.maximum(var, 0.0) / n_rows)


# ---------------------------------------------------------------------------
# bias bound and empirical diagnostics
# ---------------------------------------------------------------------------

def bias_lower_bound(eta: float, xi: float, delta: float) -> float:
    """Worst-case gradient bias floor for a label-trusting estimator.

    eta is the probability a row looks trustworthy (prediction at or below
    label), xi the clean fraction of the data, delta the gap (in max norm)
    between the mean loss gradient on the two sides of the partition:

        eta * (1 - eta) * (1 - xi) * delta / (1 - eta * xi).

    Returns 0 when eta * xi == 1 (then eta == xi == 1: nothing looks wrong
    and nothing is corrupted, so the numerator vanishes as well).
    """
    if not (0.0 <= eta <= 1.0):
        raise ValueError("eta must lie in [0, 1]")
    if not (0.0 <= xi <= 1.0):
        raise ValueError("xi must lie in [0, 1]")
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    denom = 1.0 - eta * xi
    if denom <= 0.0:
        return 0.0
    return eta * (1.0 - eta) * (1.0 - xi) * delta / denom


@dataclass(frozen=True)
class BiasDiagnostics:
    eta: float
    xi: float
    delta: float
    bound: float
    n_rows: int
    n_upper: int


def estimate_bias_diagnostics(
    model,
    xs: np.ndarray,
    ys: np.ndarray,
    spec: LossSpec,
    clean_fraction: float,
) -> BiasDiagnostics:
    """Plug-in eta, delta and the resulting bias floor on a dataset.

    eta is the trusted-row fraction under the current model; delta is the
    max-norm gap between the mean two-sided loss gradient on trusted rows
    and on the rest. Both sides must be nonempty, otherwise the gap is not
    estimable and this raises.
    """
    if not (0.0 <= clean_fraction <= 1.0):
        raise ValueError("clean_fraction must lie in [0, 1]")
    ys = np.asarray(ys, dtype=float)
    preds, cache = model.forward_train(xs, None)
    up = partition_upper(preds, ys)
    n = ys.size
    n_up = int(up.sum())
    if n_up == 0 or n_up == n:
        raise ValueError(
            "every row fell on one side of the partition; the side gap "
            "delta is not estimable (eta is degenerate)"
        )
    coeff = np.where(up, dloss_df(spec, preds, ys, "upper"),
                     dloss_df(spec, preds, ys, "lower"))
    g_up = model.backward_weighted(cache, np.where(up, coeff, 0.0) / n_up)
    g_lo = model.backward_weighted(cache, np.where(up, 0.0, coeff) / (n - n_up))
    delta = float(np.max(np.abs(g_up - g_lo)))
    eta = n_up / n
    return BiasDiagnostics(
        eta=eta,
        xi=clean_fraction,
        delta=delta,
        bound=bias_lower_bound(eta, clean_fraction, delta),
        n_rows=n,
        n_upper=n_up,
    )
