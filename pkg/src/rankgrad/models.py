"""Model adapters: ordinary least squares and a one-hidden-layer ReLU network.

Both adapters accept a design matrix ``X`` (``n x k``, possibly ``k = 0``)
and a response that is either a vector or an ``n x d`` matrix, and expose a
deterministic ``predict``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, TrainingError

__all__ = ["OLSModel", "MLPConfig", "MLPModel", "fit_ols", "fit_mlp", "fit_model", "MODEL_KINDS"]

MODEL_KINDS = ("ols", "mlp")


def _xy(X, y):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != X.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("non-finite values in training data")
    return X, y


@dataclass(frozen=True)
class OLSModel:
    """Linear model ``intercept + X @ coef``."""

    intercept: np.ndarray
    coef: np.ndarray
    kind: str = field(default="ols", init=False)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        out = X @ self.coef + self.intercept
        return out


def fit_ols(X, y) -> OLSModel:
    """Least-squares fit with an intercept.

    Raises
    ------
    TrainingError
        If the design matrix (with intercept column) is rank deficient or
        there are too few rows.
    """
    X, y = _xy(X, y)
    n, k = X.shape
    if n <= k + 1:
        raise TrainingError(f"need more than {k + 1} rows to fit {k} coefficients, got {n}")
    design = np.column_stack([np.ones(n), X])
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < k + 1:
        raise TrainingError(f"design matrix is rank deficient (rank {rank} < {k + 1})")
    return OLSModel(np.asarray(beta[0]), np.asarray(beta[1:]))


@dataclass(frozen=True)
class MLPConfig:
    """Training settings for :func:`fit_mlp`.

    ``hidden=None`` picks 5 units for a single response and 10 for several.
    Training is full-batch Adam on mean squared error.
    """

    hidden: int | None = None
    max_iter: int = 1000
    learning_rate: float = 0.01
    seed: int = 0
    tol: float = 1e-10


@dataclass(frozen=True)
class MLPModel:
    """``relu(X @ W1 + b1) @ W2 + b2`` on standardized inputs and targets."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: np.ndarray
    y_scale: np.ndarray
    loss_history: tuple[float, ...]
    squeeze: bool
    kind: str = field(default="mlp", init=False)

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        xs = (X - self.x_mean) / self.x_scale
        out = _forward(xs, self.W1, self.b1, self.W2, self.b2)[0] * self.y_scale + self.y_mean
        return out[:, 0] if self.squeeze else out


def _forward(X, W1, b1, W2, b2):
    pre = X @ W1 + b1
    h = np.maximum(pre, 0.0)
    return h @ W2 + b2, pre, h


def mlp_loss_and_grads(params, X, Y):
    """Mean squared error (averaged over rows and outputs) and its gradients.

    ``params`` is ``(W1, b1, W2, b2)``; gradients come back in the same order.
    """
    W1, b1, W2, b2 = params
    out, pre, h = _forward(X, W1, b1, W2, b2)
    err = out - Y
    m = err.size
    loss = float(np.sum(err**2) / m)
    d_out = 2.0 * err / m
    gW2 = h.T @ d_out
    gb2 = d_out.sum(axis=0)
    d_h = (d_out @ W2.T) * (pre > 0)
    gW1 = X.T @ d_h
    gb1 = d_h.sum(axis=0)
    return loss, (gW1, gb1, gW2, gb2)


def _init(rng, fan_in, fan_out):
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, (fan_in, fan_out)), rng.uniform(-bound, bound, fan_out)


def fit_mlp(X, y, config: MLPConfig | None = None) -> MLPModel:
    """Train a one-hidden-layer ReLU network with a linear output.

    Inputs and targets are standardized internally with training statistics;
    predictions are mapped back to the target scale. Weights are initialized
    uniformly in ``+-1/sqrt(fan_in)`` from ``config.seed``, so equal seeds give
    bit-identical models.

    Raises
    ------
    TrainingError
        If the loss becomes non-finite.
    """
    config = config or MLPConfig()
    X, y = _xy(X, y)
    squeeze = y.ndim == 1
    Y = y[:, None] if squeeze else y
    n, k = X.shape
    d = Y.shape[1]
    hidden = config.hidden if config.hidden is not None else (5 if d == 1 else 10)
    if hidden < 1:
        raise InputError("hidden size must be at least 1")

    x_mean = X.mean(axis=0) if k else np.zeros(0)
    x_scale = X.std(axis=0) if k else np.ones(0)
    x_scale = np.where(x_scale > 0, x_scale, 1.0)
    y_mean = Y.mean(axis=0)
    y_scale = Y.std(axis=0)
    y_scale = np.where(y_scale > 0, y_scale, 1.0)
    Xs = (X - x_mean) / x_scale
    Ys = (Y - y_mean) / y_scale

    rng = np.random.default_rng(config.seed)
    W1, b1 = _init(rng, k, hidden)
    W2, b2 = _init(rng, hidden, d)
    params = [W1, b1, W2, b2]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    history = []
    prev = np.inf
    for it in range(1, config.max_iter + 1):
        # divergence surfaces as a non-finite loss, checked right below
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grads = mlp_loss_and_grads(params, Xs, Ys)
        if not np.isfinite(loss):
            raise TrainingError(
                f"MLP loss became non-finite at iteration {it} "
                f"(learning_rate={config.learning_rate}, last finite loss {prev:.4g})"
            )
        history.append(loss)
        if abs(prev - loss) < config.tol:
            break
        prev = loss
        for i, g in enumerate(grads):
            m[i] = beta1 * m[i] + (1 - beta1) * g
            v[i] = beta2 * v[i] + (1 - beta2) * g * g
            mhat = m[i] / (1 - beta1**it)
            vhat = v[i] / (1 - beta2**it)
            params[i] = params[i] - config.learning_rate * mhat / (np.sqrt(vhat) + eps)
    W1, b1, W2, b2 = params
    return MLPModel(W1, b1, W2, b2, x_mean, x_scale, y_mean, y_scale, tuple(history), squeeze)


def fit_model(kind: str, X, y, mlp_config: MLPConfig | None = None):
    """Dispatch to :func:`fit_ols` or :func:`fit_mlp` by name."""
    if kind == "ols":
        return fit_ols(X, y)
    if kind == "mlp":
        return fit_mlp(X, y, mlp_config)
    raise InputError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")
