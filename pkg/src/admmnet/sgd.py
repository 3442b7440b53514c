"""Reference mini-batch backpropagation trainer on the same loss.

Plain SGD, no momentum.  It shares the hinge loss, activations and
history schema with the alternating-minimization trainer so the CLI can
put both on one accuracy-versus-time plot.  Subgradient convention at
kinks: derivative 0 at relu(0), at the hard-sigmoid corners, and at the
hinge corners.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .metrics import MetricsRow
from .network import Architecture, TrainResult, accuracy


class DivergedError(RuntimeError):
    """The loss became non-finite during training."""


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.1
    batch_size: int = 32
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size >= 1 and epochs >= 0 required")


def init_weights(arch: Architecture, seed: int) -> list[np.ndarray]:
    """Gaussian init with variance 1/fan-in per layer."""
    rng = np.random.default_rng(seed)
    dims = arch.layer_dims
    return [
        rng.standard_normal((dims[l + 1], dims[l])) / np.sqrt(dims[l])
        for l in range(len(dims) - 1)
    ]


def _activation_grad(arch: Architecture, z: np.ndarray) -> np.ndarray:
    kind = arch.activation.kind
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "hard_sigmoid":
        return ((z > 0) & (z < 1)).astype(np.float64)
    raise ValueError(f"no gradient for activation kind {kind!r}")


def _hinge_grad(scores: np.ndarray, Y: np.ndarray) -> np.ndarray:
    # y=1: d/dz max(1-z, 0) = -1 for z < 1; y=0: d/dz max(z, 0) = 1 for z > 0
    return np.where(Y == 1.0, -(scores < 1.0).astype(np.float64),
                    (scores > 0.0).astype(np.float64))


def loss_and_gradient(
    weights: list[np.ndarray], X: np.ndarray, Y: np.ndarray, arch: Architecture
) -> tuple[float, list[np.ndarray]]:
    """Mean hinge loss over the batch and its gradient w.r.t. each weight."""
    L = len(weights)
    n = X.shape[1]
    acts = [np.asarray(X, dtype=np.float64)]
    pre: list[np.ndarray] = []
    for l in range(L - 1):
        z = weights[l] @ acts[-1]
        pre.append(z)
        acts.append(arch.activation(z))
    scores = weights[L - 1] @ acts[-1]
    loss_matrix = np.where(Y == 1.0, np.maximum(1.0 - scores, 0.0),
                           np.maximum(scores, 0.0))
    loss = float(loss_matrix.sum()) / n
    delta = _hinge_grad(scores, Y) / n
    grads: list[np.ndarray] = [None] * L  # type: ignore[list-item]
    grads[L - 1] = delta @ acts[L - 1].T
    for l in range(L - 2, -1, -1):
        delta = (weights[l + 1].T @ delta) * _activation_grad(arch, pre[l])
        grads[l] = delta @ acts[l].T
    return loss, grads


def sgd_train(
    data: Dataset,
    arch: Architecture,
    cfg: SgdConfig,
    test_data: Dataset | None = None,
    stop_accuracy: float | None = None,
) -> TrainResult:
    """Mini-batch SGD; history rows use the same schema as the main trainer."""
    weights = init_weights(arch, cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)
    X, Y = data.features, data.labels
    n = data.n_samples
    history: list[MetricsRow] = []
    elapsed = 0.0
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            loss, grads = loss_and_gradient(weights, X[:, idx], Y[:, idx], arch)
            if not np.isfinite(loss):
                raise DivergedError(f"non-finite loss at epoch {epoch + 1}")
            for W, g in zip(weights, grads):
                W -= cfg.learning_rate * g
        elapsed += time.perf_counter() - t0
        full_loss, _ = loss_and_gradient(weights, X, Y, arch)
        train_acc = accuracy(weights, data, arch)
        test_acc = accuracy(weights, test_data, arch) if test_data is not None else None
        history.append(
            MetricsRow(epoch + 1, elapsed, full_loss * n, train_acc, test_acc)
        )
        monitored = test_acc if test_acc is not None else train_acc
        if stop_accuracy is not None and monitored >= stop_accuracy:
            break
    return TrainResult(weights=weights, history=history, state=None)  # type: ignore[arg-type]


def search_learning_rate(
    data: Dataset,
    arch: Architecture,
    rates=(0.3, 0.1, 0.03, 0.01),
    epochs: int = 20,
    seed: int = 0,
) -> float:
    """Tiny grid search: pick the rate with the best final train accuracy."""
    best_rate, best_acc = rates[0], -1.0
    for rate in rates:
        cfg = SgdConfig(learning_rate=rate, epochs=epochs, seed=seed)
        try:
            result = sgd_train(data, arch, cfg)
        except DivergedError:
            continue
        acc = result.history[-1].train_accuracy
        if acc > best_acc:
            best_rate, best_acc = rate, acc
    return best_rate


def gradient_check(
    arch: Architecture,
    seed: int,
    n_samples: int = 5,
    step: float = 1e-5,
    kink_margin: float = 1e-3,
) -> float:
    """Max relative error of backprop against central finite differences.

    Inputs and weights are redrawn until every pre-activation and score
    is at least ``kink_margin`` from a hinge/activation corner, so the
    loss is differentiable in the probed neighborhood.
    """
    rng = np.random.default_rng(seed)
    dims = arch.layer_dims
    for _ in range(100):
        weights = [
            rng.standard_normal((dims[l + 1], dims[l])) / np.sqrt(dims[l])
            for l in range(len(dims) - 1)
        ]
        X = rng.standard_normal((dims[0], n_samples))
        Y = np.zeros((dims[-1], n_samples))
        Y[rng.integers(0, dims[-1], n_samples), np.arange(n_samples)] = 1.0
        if _clear_of_kinks(weights, X, Y, arch, kink_margin):
            break
    else:
        raise RuntimeError("could not find a kink-free probe point")

    _, grads = loss_and_gradient(weights, X, Y, arch)
    max_rel = 0.0
    for l, W in enumerate(weights):
        flat_idx = rng.choice(W.size, size=min(20, W.size), replace=False)
        for k in flat_idx:
            i, j = divmod(int(k), W.shape[1])
            orig = W[i, j]
            W[i, j] = orig + step
            up, _ = loss_and_gradient(weights, X, Y, arch)
            W[i, j] = orig - step
            dn, _ = loss_and_gradient(weights, X, Y, arch)
            W[i, j] = orig
            fd = (up - dn) / (2 * step)
            denom = max(abs(fd), abs(grads[l][i, j]), 1e-8)
            max_rel = max(max_rel, abs(fd - grads[l][i, j]) / denom)
    return max_rel


def _clear_of_kinks(weights, X, Y, arch: Architecture, margin: float) -> bool:
    a = X
    kind = arch.activation.kind
    for l in range(len(weights) - 1):
        z = weights[l] @ a
        corners = [0.0] if kind == "relu" else [0.0, 1.0]
        if any(np.any(np.abs(z - c) < margin) for c in corners):
            return False
        a = arch.activation(z)
    scores = weights[-1] @ a
    kink = np.where(Y == 1.0, 1.0, 0.0)
    return not np.any(np.abs(scores - kink) < margin)
