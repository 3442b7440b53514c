"""Separable hinge loss and the closed-form final-layer output update.

The per-entry loss for a binary target is

    y = 1:  max(1 - z, 0)
    y = 0:  max(z, 0)

Both pieces are affine, so the final-layer sub-problem

    minimize over z:  loss(z, y) + lam * z + beta * (z - w)**2

is quadratic on each branch and solved exactly by comparing the two
clamped branch minimizers.
"""

from __future__ import annotations

import math

import numpy as np


def _check_label(y):
    arr = np.asarray(y)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("labels must be binary (0 or 1)")


def hinge(z: float, y: int) -> float:
    """Hinge penalty for one score/label pair."""
    _check_label(y)
    if y == 1:
        return max(1.0 - z, 0.0)
    return max(z, 0.0)


def hinge_matrix(Z, Y) -> np.ndarray:
    """Entrywise hinge penalty for score matrix ``Z`` and one-hot ``Y``."""
    _check_label(Y)
    Z = np.asarray(Z, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    return np.where(Y == 1.0, np.maximum(1.0 - Z, 0.0), np.maximum(Z, 0.0))


def _check_finite(*vals):
    for v in vals:
        if not math.isfinite(v):
            raise ValueError("non-finite input to closed-form solver")


def solve_zL_hinge(w: float, y: int, lam: float, beta: float) -> float:
    """Global minimizer of ``hinge(z, y) + lam*z + beta*(z - w)**2``.

    The two affine pieces of the hinge give two candidate minimizers,
    each clamped to its branch; the lower branch wins ties.
    """
    _check_finite(w, lam)
    if not beta > 0:
        raise ValueError("beta must be strictly positive")
    _check_label(y)
    if y == 1:
        z_up = max(1.0, w - lam / (2.0 * beta))
        z_dn = min(1.0, w + (1.0 - lam) / (2.0 * beta))
    else:
        z_up = max(0.0, w - (1.0 + lam) / (2.0 * beta))
        z_dn = min(0.0, w - lam / (2.0 * beta))
    obj_up = hinge(z_up, y) + lam * z_up + beta * (z_up - w) ** 2
    obj_dn = hinge(z_dn, y) + lam * z_dn + beta * (z_dn - w) ** 2
    return z_dn if obj_dn <= obj_up else z_up


def solve_zL_hinge_matrix(W, Y, Lam, beta) -> np.ndarray:
    """Vectorized :func:`solve_zL_hinge` over paired entries."""
    if not np.all(np.asarray(beta) > 0):
        raise ValueError("beta must be strictly positive")
    _check_label(Y)
    W = np.asarray(W, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    Lam = np.asarray(Lam, dtype=np.float64)
    pos = Y == 1.0
    z_up = np.where(
        pos,
        np.maximum(1.0, W - Lam / (2.0 * beta)),
        np.maximum(0.0, W - (1.0 + Lam) / (2.0 * beta)),
    )
    z_dn = np.where(
        pos,
        np.minimum(1.0, W + (1.0 - Lam) / (2.0 * beta)),
        np.minimum(0.0, W - Lam / (2.0 * beta)),
    )
    obj_up = hinge_matrix(z_up, Y) + Lam * z_up + beta * (z_up - W) ** 2
    obj_dn = hinge_matrix(z_dn, Y) + Lam * z_dn + beta * (z_dn - W) ** 2
    return np.where(obj_dn <= obj_up, z_dn, z_up)


def hinge_subgradient_interval(z: float, y: int) -> tuple[float, float]:
    """Subdifferential of the hinge at ``z`` as a closed interval."""
    _check_label(y)
    if y == 1:
        if z < 1.0:
            return (-1.0, -1.0)
        if z == 1.0:
            return (-1.0, 0.0)
        return (0.0, 0.0)
    if z < 0.0:
        return (0.0, 0.0)
    if z == 0.0:
        return (0.0, 1.0)
    return (1.0, 1.0)


def subgradient_violation(Z, Y, S, slack: float = 1e-8) -> float:
    """Largest distance of ``-S`` entries from the hinge subdifferential.

    For each entry the membership ``-S[i,j] in d(hinge)(Z[i,j], Y[i,j])``
    is checked with kink detection widened by ``slack``; returns the
    maximum shortfall (0 means every entry is inside the interval).
    """
    _check_label(Y)
    Z = np.asarray(Z, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    S = np.asarray(S, dtype=np.float64)
    kink = np.where(Y == 1.0, 1.0, 0.0)
    # interval bounds of the subdifferential at each entry; the kink test
    # is widened by `slack` so roundoff-adjacent points keep the interval
    lo = np.where(Y == 1.0,
                  np.where(Z <= kink + slack, -1.0, 0.0),
                  np.where(Z <= kink + slack, 0.0, 1.0))
    hi = np.where(Y == 1.0,
                  np.where(Z < kink - slack, -1.0, 0.0),
                  np.where(Z < kink - slack, 0.0, 1.0))
    g = -S
    viol = np.maximum(lo - g, g - hi)
    return float(np.maximum(viol, 0.0).max())
