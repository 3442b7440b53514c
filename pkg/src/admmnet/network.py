"""Single-node alternating-minimization training loop.

One iteration sweeps the layers in order, exactly minimizing the
penalized objective in one variable block at a time:

    for l = 1 .. L-1:
        W_l  <- least-squares fit of z_l from a_{l-1}
        a_l  <- ridge-free linear solve mixing the layer above and h(z_l)
        z_l  <- entrywise closed-form output update
    W_L  <- least-squares fit of z_L from a_{L-1}
    z_L  <- entrywise hinge update with the multiplier term
    lam  <- lam + beta_L * (z_L - W_L a_{L-1})      (skipped during warm start)

The multiplier step is skipped for a configurable number of warm-start
iterations so the penalty-only objective is well minimized before dual
ascent begins.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .activations import Activation, RELU, solve_z_matrix
from .data import Dataset
from .linalg import SpdFactor
from .loss import hinge_matrix, solve_zL_hinge_matrix, subgradient_violation
from .metrics import MetricsRow


@dataclass(frozen=True)
class Architecture:
    """Layer widths ``[d_0, ..., d_L]`` plus the hidden nonlinearity.

    The final layer is linear; ``layer_dims[-1]`` must equal the number
    of classes.
    """

    layer_dims: tuple[int, ...]
    activation: Activation = RELU

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        object.__setattr__(self, "layer_dims", dims)
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError("need at least 2 layer dims, all >= 1")

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1


@dataclass(frozen=True)
class Hyperparams:
    """Penalty weights and loop controls.

    ``beta`` has one entry per layer 1..L and ``gamma`` one per hidden
    layer 1..L-1; scalars broadcast.  ``ridge`` of ``None`` selects the
    trace-scaled default inside the solvers.
    """

    beta: tuple[float, ...] = (1.0,)
    gamma: tuple[float, ...] = (10.0,)
    warmup_iters: int = 10
    train_iters: int = 100
    ridge: float | None = None
    seed: int = 0

    @staticmethod
    def for_architecture(
        arch: Architecture,
        beta: float | tuple = 1.0,
        gamma: float | tuple = 10.0,
        warmup_iters: int = 10,
        train_iters: int = 100,
        ridge: float | None = None,
        seed: int = 0,
    ) -> "Hyperparams":
        L = arch.n_layers
        betas = tuple(float(b) for b in (np.broadcast_to(beta, (L,))))
        gammas = tuple(float(g) for g in (np.broadcast_to(gamma, (max(L - 1, 1),))))
        return Hyperparams(betas, gammas, warmup_iters, train_iters, ridge, seed)

    def __post_init__(self):
        if any(b <= 0 for b in self.beta) or any(g <= 0 for g in self.gamma):
            raise ValueError("beta and gamma must be strictly positive")
        if self.warmup_iters < 0 or self.train_iters < 0:
            raise ValueError("iteration counts must be nonnegative")
        if self.ridge is not None and self.ridge < 0:
            raise ValueError("ridge must be nonnegative")

    def beta_l(self, l: int) -> float:
        return self.beta[min(l - 1, len(self.beta) - 1)]

    def gamma_l(self, l: int) -> float:
        return self.gamma[min(l - 1, len(self.gamma) - 1)]


@dataclass
class NetworkState:
    """All training variables: weights, activations, outputs, multiplier.

    ``a[0]`` is the immutable training input; ``z[l-1]`` and ``a[l]``
    hold layer ``l``'s pre- and post-nonlinearity variables.  Weights
    start unset because the first sweep fits them before anything else.
    """

    arch: Architecture
    labels: np.ndarray
    a: list  # a[0] .. a[L-1]
    z: list  # z[0]=z_1 .. z[L-1]=z_L
    weights: list  # W_1 .. W_L, entries may be None before the first sweep
    lam: np.ndarray
    wa_final: np.ndarray | None = field(default=None, repr=False)  # cached W_L a_{L-1}

    @property
    def n_samples(self) -> int:
        return self.a[0].shape[1]


def init_state(arch: Architecture, data: Dataset, hp: Hyperparams) -> NetworkState:
    """Seeded Gaussian initialization of activations and outputs.

    Draw order is fixed (all hidden activations, then all outputs, one
    layer at a time) so a distributed run can reproduce it column for
    column.  The multiplier starts at zero; weights are left unset.
    """
    dims = arch.layer_dims
    if data.n_features != dims[0]:
        raise ValueError(
            f"data has {data.n_features} features, architecture expects {dims[0]}"
        )
    if data.n_classes != dims[-1]:
        raise ValueError(
            f"data has {data.n_classes} classes, architecture expects {dims[-1]}"
        )
    n = data.n_samples
    L = arch.n_layers
    rng = np.random.default_rng(hp.seed)
    a = [np.ascontiguousarray(data.features, dtype=np.float64)]
    a += [rng.standard_normal((dims[l], n)) for l in range(1, L)]
    z = [rng.standard_normal((dims[l], n)) for l in range(1, L + 1)]
    lam = np.zeros((dims[L], n))
    return NetworkState(
        arch=arch,
        labels=np.asarray(data.labels, dtype=np.float64),
        a=a,
        z=z,
        weights=[None] * L,
        lam=lam,
    )


def weight_update(
    state: NetworkState,
    l: int,
    ridge: float | None = None,
    factor: SpdFactor | None = None,
) -> np.ndarray:
    """Least-squares fit ``W_l <- z_l a_{l-1}^+`` (ridge-regularized).

    A precomputed factor of ``gram(a_{l-1}) + ridge*I`` may be supplied;
    layer 1's factor never changes because the input is immutable.
    """
    a_prev = state.a[l - 1]
    if factor is None:
        G = linalg.gram(a_prev)
        if ridge is None:
            ridge = linalg.default_ridge(G)
        factor = linalg.spd_factor_with_retry(G, ridge)
    W = linalg.solve_right(linalg.cross_gram(state.z[l - 1], a_prev), factor)
    state.weights[l - 1] = W
    return W


def activation_update(state: NetworkState, hp: Hyperparams, l: int) -> np.ndarray:
    """Exact solve for hidden activation ``a_l`` (1 <= l <= L-1).

    On the very first sweep ``W_{l+1}`` is still unset; it then acts as
    zero and the update reduces to ``a_l = h(z_l)``.
    """
    W_next = state.weights[l]
    h = state.arch.activation
    if W_next is None:
        a_l = h(state.z[l - 1])
        state.a[l] = a_l
        return a_l
    beta_next = hp.beta_l(l + 1)
    gamma_l = hp.gamma_l(l)
    M = beta_next * linalg.gram(W_next.T) + gamma_l * np.eye(W_next.shape[1])
    F = linalg.spd_factor(M)
    rhs = beta_next * (W_next.T @ state.z[l]) + gamma_l * h(state.z[l - 1])
    a_l = linalg.solve_left(F, rhs)
    state.a[l] = a_l
    return a_l


def output_update(state: NetworkState, hp: Hyperparams, l: int) -> np.ndarray:
    """Entrywise closed-form update of hidden output ``z_l``."""
    w_pred = state.weights[l - 1] @ state.a[l - 1]
    z_l = solve_z_matrix(
        state.arch.activation, state.a[l], w_pred, hp.gamma_l(l), hp.beta_l(l)
    )
    state.z[l - 1] = z_l
    return z_l


def output_update_final(state: NetworkState, hp: Hyperparams) -> np.ndarray:
    """Entrywise hinge update of the final output with the multiplier term."""
    L = state.arch.n_layers
    wa = state.weights[L - 1] @ state.a[L - 1]
    state.wa_final = wa
    z_L = solve_zL_hinge_matrix(wa, state.labels, state.lam, hp.beta_l(L))
    state.z[L - 1] = z_L
    return z_L


def lagrange_update(state: NetworkState, hp: Hyperparams) -> np.ndarray:
    """Dual ascent step ``lam <- lam + beta_L (z_L - W_L a_{L-1})``."""
    L = state.arch.n_layers
    wa = state.wa_final
    if wa is None:
        wa = state.weights[L - 1] @ state.a[L - 1]
    state.lam = state.lam + hp.beta_l(L) * (state.z[L - 1] - wa)
    return state.lam


def admm_iteration(
    state: NetworkState,
    hp: Hyperparams,
    update_lambda: bool,
    layer1_factor: SpdFactor | None = None,
) -> NetworkState:
    """One full sweep over all variable blocks, in fixed order."""
    L = state.arch.n_layers
    for l in range(1, L):
        weight_update(state, l, ridge=hp.ridge, factor=layer1_factor if l == 1 else None)
        activation_update(state, hp, l)
        output_update(state, hp, l)
    weight_update(state, L, ridge=hp.ridge, factor=layer1_factor if L == 1 else None)
    output_update_final(state, hp)
    if update_lambda:
        lagrange_update(state, hp)
    return state


def objective(state: NetworkState, hp: Hyperparams) -> float:
    """Penalized training objective (entry sums, squared Frobenius norms).

    With a zero multiplier this is the pure penalty relaxation; the
    linear multiplier term is added otherwise.
    """
    if any(W is None for W in state.weights):
        raise ValueError("objective needs all weights set; run a sweep first")
    L = state.arch.n_layers
    h = state.arch.activation
    z_L = state.z[L - 1]
    wa = state.weights[L - 1] @ state.a[L - 1]
    total = float(hinge_matrix(z_L, state.labels).sum())
    total += float((z_L * state.lam).sum())
    total += hp.beta_l(L) * float(((z_L - wa) ** 2).sum())
    for l in range(1, L):
        r_act = state.a[l] - h(state.z[l - 1])
        r_out = state.z[l - 1] - state.weights[l - 1] @ state.a[l - 1]
        total += hp.gamma_l(l) * float((r_act**2).sum())
        total += hp.beta_l(l) * float((r_out**2).sum())
    return total


def multiplier_membership_violation(state: NetworkState, hp: Hyperparams) -> float:
    """Distance of the dual variable from the loss subdifferential.

    After the final output and multiplier updates,
    ``lam + beta_L (z_L - W_L a_{L-1})`` must lie in the negated hinge
    subdifferential at ``z_L``; returns the largest entrywise violation.
    """
    L = state.arch.n_layers
    wa = state.weights[L - 1] @ state.a[L - 1]
    s = state.lam + hp.beta_l(L) * (state.z[L - 1] - wa)
    return subgradient_violation(state.z[L - 1], state.labels, s)


def forward_scores(weights, X, arch: Architecture) -> np.ndarray:
    """Class scores from the feed-forward pass through the fitted weights."""
    a = np.asarray(X, dtype=np.float64)
    if a.shape[0] != arch.layer_dims[0]:
        raise ValueError(
            f"input has {a.shape[0]} features, architecture expects {arch.layer_dims[0]}"
        )
    L = arch.n_layers
    for l in range(L - 1):
        a = arch.activation(weights[l] @ a)
    return weights[L - 1] @ a


def predict(weights, X, arch: Architecture) -> np.ndarray:
    """Predicted class per column; the lowest row index wins score ties."""
    return np.argmax(forward_scores(weights, X, arch), axis=0)


def accuracy(weights, data: Dataset, arch: Architecture) -> float:
    pred = predict(weights, data.features, arch)
    return float(np.mean(pred == data.class_indices()))


@dataclass
class TrainResult:
    weights: list
    history: list[MetricsRow]
    state: NetworkState
    weight_snapshots: list | None = None


def train(
    data: Dataset,
    arch: Architecture,
    hp: Hyperparams,
    test_data: Dataset | None = None,
    record_weights: bool = False,
    stop_accuracy: float | None = None,
) -> TrainResult:
    """Run warm-start iterations then multiplier iterations.

    History records one row per iteration with cumulative optimization
    wall time (data loading excluded by construction), the penalized
    objective, and train/test accuracy.  ``stop_accuracy`` stops early
    once the monitored accuracy (test when available, else train)
    reaches the threshold.
    """
    state = init_state(arch, data, hp)
    G0 = linalg.gram(state.a[0])
    ridge0 = hp.ridge if hp.ridge is not None else linalg.default_ridge(G0)
    layer1_factor = linalg.spd_factor_with_retry(G0, ridge0)

    history: list[MetricsRow] = []
    snapshots: list | None = [] if record_weights else None
    total = hp.warmup_iters + hp.train_iters
    elapsed = 0.0
    for it in range(total):
        t0 = time.perf_counter()
        admm_iteration(state, hp, update_lambda=it >= hp.warmup_iters,
                       layer1_factor=layer1_factor)
        elapsed += time.perf_counter() - t0
        train_acc = accuracy(state.weights, data, arch)
        test_acc = (
            accuracy(state.weights, test_data, arch) if test_data is not None else None
        )
        history.append(
            MetricsRow(
                iteration=it + 1,
                wall_seconds=elapsed,
                objective=objective(state, hp),
                train_accuracy=train_acc,
                test_accuracy=test_acc,
            )
        )
        if snapshots is not None:
            snapshots.append([W.copy() for W in state.weights])
        monitored = test_acc if test_acc is not None else train_acc
        if stop_accuracy is not None and monitored >= stop_accuracy:
            break
    return TrainResult(
        weights=state.weights, history=history, state=state, weight_snapshots=snapshots
    )
