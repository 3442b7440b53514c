"""Activation functions and the closed-form one-dimensional output solvers.

The output update decouples into independent scalar problems

    minimize over z:  gamma * (a - h(z))**2 + beta * (z - w)**2

For piecewise-linear ``h`` (ReLU and the hard sigmoid) the global
minimizer is found by comparing the per-branch quadratic minimizers.
For arbitrary tabulated activations a brute-force grid search is
provided; the grid search doubles as the independent oracle in the test
suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def relu(x):
    return np.maximum(x, 0.0)


def hard_sigmoid(x):
    return np.clip(x, 0.0, 1.0)


@dataclass(frozen=True)
class Activation:
    """An entrywise nonlinearity.

    ``kind`` is one of ``relu``, ``hard_sigmoid`` or ``tabulated``.  The
    tabulated form interpolates sampled values linearly over a uniform
    grid and clamps outside it; the samples must be nondecreasing.
    """

    kind: str
    grid: np.ndarray | None = field(default=None, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("relu", "hard_sigmoid", "tabulated"):
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind == "tabulated":
            if self.grid is None or self.values is None:
                raise ValueError("tabulated activation needs grid and values")
            if len(self.grid) != len(self.values) or len(self.grid) < 2:
                raise ValueError("grid and values must share a length >= 2")
            if np.any(np.diff(self.values) < 0):
                raise ValueError("tabulated activation must be nondecreasing")

    def __call__(self, x):
        if self.kind == "relu":
            return relu(x)
        if self.kind == "hard_sigmoid":
            return hard_sigmoid(x)
        return np.interp(x, self.grid, self.values)


RELU = Activation("relu")
HARD_SIGMOID = Activation("hard_sigmoid")


def apply(h: Activation, X):
    """Entrywise application of ``h``; preserves shape."""
    return h(np.asarray(X, dtype=np.float64))


def _check_finite(*vals):
    for v in vals:
        if not math.isfinite(v):
            raise ValueError("non-finite input to closed-form solver")


def _check_positive(gamma, beta):
    if not (np.all(np.asarray(gamma) > 0) and np.all(np.asarray(beta) > 0)):
        raise ValueError("gamma and beta must be strictly positive")


def objective(h, a: float, w: float, gamma: float, beta: float, z: float) -> float:
    """The scalar sub-problem objective at ``z``."""
    hz = float(h(z))
    return gamma * (a - hz) ** 2 + beta * (z - w) ** 2


def solve_z_relu(a: float, w: float, gamma: float, beta: float) -> float:
    """Global minimizer of the scalar sub-problem with ``h = relu``.

    The objective is quadratic on each branch (z <= 0 and z >= 0); the
    branch minimizers are compared and ties go to the nonnegative branch.
    """
    _check_finite(a, w)
    _check_positive(gamma, beta)
    z_neg = min(w, 0.0)
    obj_neg = gamma * a * a + beta * (z_neg - w) ** 2
    z_pos = max((gamma * a + beta * w) / (gamma + beta), 0.0)
    obj_pos = gamma * (a - z_pos) ** 2 + beta * (z_pos - w) ** 2
    return z_pos if obj_pos <= obj_neg else z_neg


def solve_z_hardsig(a: float, w: float, gamma: float, beta: float) -> float:
    """Global minimizer of the scalar sub-problem with ``h = hard_sigmoid``.

    Branches are z <= 0, 0 <= z <= 1 and z >= 1; ties prefer the middle
    branch, and between the outer branches the lower one.
    """
    _check_finite(a, w)
    _check_positive(gamma, beta)
    z_lo = min(w, 0.0)
    obj_lo = gamma * a * a + beta * (z_lo - w) ** 2
    z_mid = min(max((gamma * a + beta * w) / (gamma + beta), 0.0), 1.0)
    obj_mid = gamma * (a - z_mid) ** 2 + beta * (z_mid - w) ** 2
    z_hi = max(w, 1.0)
    obj_hi = gamma * (a - 1.0) ** 2 + beta * (z_hi - w) ** 2
    if obj_mid <= obj_lo and obj_mid <= obj_hi:
        return z_mid
    return z_lo if obj_lo <= obj_hi else z_hi


def solve_z_relu_matrix(A, W, gamma: float, beta: float) -> np.ndarray:
    """Vectorized :func:`solve_z_relu` over paired entries of ``A`` and ``W``."""
    _check_positive(gamma, beta)
    A = np.asarray(A, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    z_neg = np.minimum(W, 0.0)
    obj_neg = gamma * A * A + beta * (z_neg - W) ** 2
    z_pos = np.maximum((gamma * A + beta * W) / (gamma + beta), 0.0)
    obj_pos = gamma * (A - z_pos) ** 2 + beta * (z_pos - W) ** 2
    return np.where(obj_pos <= obj_neg, z_pos, z_neg)


def solve_z_hardsig_matrix(A, W, gamma: float, beta: float) -> np.ndarray:
    """Vectorized :func:`solve_z_hardsig` over paired entries."""
    _check_positive(gamma, beta)
    A = np.asarray(A, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    z_lo = np.minimum(W, 0.0)
    obj_lo = gamma * A * A + beta * (z_lo - W) ** 2
    z_mid = np.clip((gamma * A + beta * W) / (gamma + beta), 0.0, 1.0)
    obj_mid = gamma * (A - z_mid) ** 2 + beta * (z_mid - W) ** 2
    z_hi = np.maximum(W, 1.0)
    obj_hi = gamma * (A - 1.0) ** 2 + beta * (z_hi - W) ** 2
    out = np.where(obj_lo <= obj_hi, z_lo, z_hi)
    mid_wins = (obj_mid <= obj_lo) & (obj_mid <= obj_hi)
    return np.where(mid_wins, z_mid, out)


def solve_z_matrix(h: Activation, A, W, gamma: float, beta: float) -> np.ndarray:
    """Dispatch the vectorized closed-form solver for ``h``."""
    if h.kind == "relu":
        return solve_z_relu_matrix(A, W, gamma, beta)
    if h.kind == "hard_sigmoid":
        return solve_z_hardsig_matrix(A, W, gamma, beta)
    A = np.asarray(A, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    lo = float(h.grid[0]) - 1.0
    hi = float(h.grid[-1]) + 1.0
    step = float(h.grid[1] - h.grid[0]) / 8.0
    out = np.empty_like(A)
    for idx in np.ndindex(A.shape):
        out[idx] = solve_z_grid(h, A[idx], W[idx], gamma, beta, lo, hi, step)
    return out


def solve_z_grid(
    h,
    a: float,
    w: float,
    gamma: float,
    beta: float,
    lo: float,
    hi: float,
    step: float,
) -> float:
    """Brute-force minimizer over the uniform grid ``lo, lo+step, ..., <= hi``.

    Works for any callable ``h``; the lowest-index grid point wins ties.
    This is intentionally independent of the closed-form branch logic so
    it can serve as a test oracle.
    """
    if not (step > 0) or not (lo < hi):
        raise ValueError("need lo < hi and step > 0")
    _check_finite(a, w)
    _check_positive(gamma, beta)
    z = np.arange(lo, hi + step / 2, step)
    if z.size == 0:
        raise ValueError("empty grid")
    obj = gamma * (a - h(z)) ** 2 + beta * (z - w) ** 2
    return float(z[int(np.argmin(obj))])
