import numpy as np
import pytest

import grid_oracle
from admmnet.loss import (
    hinge,
    hinge_matrix,
    hinge_subgradient_interval,
    solve_zL_hinge,
    solve_zL_hinge_matrix,
    subgradient_violation,
)


class TestHinge:
    def test_margin_satisfied(self):
        assert hinge(2.0, 1) == 0.0

    def test_positive_label_at_zero(self):
        assert hinge(0.0, 1) == 1.0

    def test_negative_label(self):
        assert hinge(0.5, 0) == 0.5

    def test_rejects_non_binary_label(self):
        with pytest.raises(ValueError):
            hinge(0.0, 2)

    def test_nonnegative_and_zero_iff_margin(self):
        rng = np.random.default_rng(4)
        for z in rng.uniform(-4, 4, 200):
            for y in (0, 1):
                v = hinge(z, y)
                assert v >= 0.0
                satisfied = (y == 1 and z >= 1) or (y == 0 and z <= 0)
                assert (v == 0.0) == satisfied


class TestSolveZLHinge:
    def test_margin_already_satisfied(self):
        assert solve_zL_hinge(2.0, 1, 0.0, 1.0) == pytest.approx(2.0)

    def test_positive_label_pull(self):
        # objective 0.75 at z=0.5 beats the clamped upper branch value 1.0
        assert solve_zL_hinge(0.0, 1, 0.0, 1.0) == pytest.approx(0.5)

    def test_negative_label_pull(self):
        # objective 0.75 at z=0.5 beats the clamped lower branch value 1.0
        assert solve_zL_hinge(1.0, 0, 0.0, 1.0) == pytest.approx(0.5)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            solve_zL_hinge(np.nan, 1, 0.0, 1.0)

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            solve_zL_hinge(0.0, 1, 0.0, 0.0)


class TestSubgradientInterval:
    def test_flat_region(self):
        assert hinge_subgradient_interval(2.0, 1) == (0.0, 0.0)

    def test_kink(self):
        assert hinge_subgradient_interval(1.0, 1) == (-1.0, 0.0)

    def test_unit_slope(self):
        assert hinge_subgradient_interval(0.5, 0) == (1.0, 1.0)

    def test_negative_label_flat(self):
        assert hinge_subgradient_interval(-1.0, 0) == (0.0, 0.0)

    def test_positive_label_slope(self):
        assert hinge_subgradient_interval(0.0, 1) == (-1.0, -1.0)


def _random_instances(n, seed):
    rng = np.random.default_rng(seed)
    return (
        rng.uniform(-3, 3, n),
        rng.integers(0, 2, n).astype(float),
        rng.uniform(-2, 2, n),
        rng.uniform(0.1, 10, n),
    )


def test_oracle_equivalence():
    w, y, lam, beta = _random_instances(500, seed=99)
    z = solve_zL_hinge_matrix(w, y, lam, beta)
    obj = hinge_matrix(z, y) + lam * z + beta * (z - w) ** 2
    oracle = grid_oracle.min_objective_hinge(w, y, lam, beta)
    assert np.all(obj <= oracle + 1e-9)


def test_matrix_solver_matches_scalar():
    w, y, lam, beta = _random_instances(100, seed=15)
    z = solve_zL_hinge_matrix(w, y, lam, 2.5)
    for i in range(0, 100, 7):
        assert z[i] == solve_zL_hinge(w[i], int(y[i]), lam[i], 2.5)


def test_subgradient_optimality_at_minimizer():
    # -(lam + 2*beta*(z* - w)) must lie in the subdifferential at z*
    w, y, lam, beta = _random_instances(300, seed=31)
    z = solve_zL_hinge_matrix(w, y, lam, beta)
    s = lam + 2.0 * beta * (z - w)
    assert subgradient_violation(z, y, s) <= 1e-8


def test_subgradient_violation_detects_bad_duals():
    z = np.array([[2.0]])  # flat region for y=1: subdifferential {0}
    y = np.array([[1.0]])
    assert subgradient_violation(z, y, np.array([[0.0]])) == 0.0
    assert subgradient_violation(z, y, np.array([[0.5]])) == pytest.approx(0.5)
