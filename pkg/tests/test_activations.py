import numpy as np
import pytest

import grid_oracle
from admmnet import activations as act
from admmnet.activations import (
    Activation,
    HARD_SIGMOID,
    RELU,
    apply,
    objective,
    solve_z_grid,
    solve_z_hardsig,
    solve_z_hardsig_matrix,
    solve_z_relu,
    solve_z_relu_matrix,
)


class TestApply:
    def test_relu(self):
        np.testing.assert_allclose(apply(RELU, [[-1.0, 0.0, 2.0]]), [[0.0, 0.0, 2.0]])

    def test_hard_sigmoid(self):
        np.testing.assert_allclose(
            apply(HARD_SIGMOID, [[-0.5, 0.5, 1.5]]), [[0.0, 0.5, 1.0]]
        )

    def test_relu_zero_matrix(self):
        np.testing.assert_allclose(apply(RELU, np.zeros((2, 3))), np.zeros((2, 3)))

    def test_tabulated_requires_monotone(self):
        grid = np.linspace(-1, 1, 5)
        with pytest.raises(ValueError):
            Activation("tabulated", grid=grid, values=np.array([0, 1, 0.5, 1, 1]))

    def test_tabulated_interpolates(self):
        grid = np.linspace(-2, 2, 9)
        h = Activation("tabulated", grid=grid, values=np.tanh(grid))
        assert h(0.0) == pytest.approx(0.0)
        assert float(h(10.0)) == pytest.approx(np.tanh(2.0))


class TestSolveZRelu:
    def test_exact_fit(self):
        assert solve_z_relu(1.0, 1.0, 10.0, 1.0) == pytest.approx(1.0)

    def test_negative_branch_wins(self):
        # objective 1 at z=-1 beats the clamped positive branch value 2 at z=0
        assert solve_z_relu(1.0, -1.0, 1.0, 1.0) == pytest.approx(-1.0)

    def test_negative_target(self):
        # objective 1 at z=-2 beats the clamped positive branch value 5
        assert solve_z_relu(-1.0, -2.0, 1.0, 1.0) == pytest.approx(-2.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            solve_z_relu(np.nan, 0.0, 1.0, 1.0)

    def test_rejects_nonpositive_weights(self):
        with pytest.raises(ValueError):
            solve_z_relu(0.0, 0.0, 0.0, 1.0)


class TestSolveZHardsig:
    def test_exact_fit_middle(self):
        assert solve_z_hardsig(0.5, 0.5, 1.0, 1.0) == pytest.approx(0.5)

    def test_exact_fit_upper(self):
        assert solve_z_hardsig(1.0, 2.0, 1.0, 1.0) == pytest.approx(2.0)

    def test_upper_branch_beats_middle(self):
        # objective 1 at z=1.5 beats middle-branch 1.125 and lower-branch 2.25
        assert solve_z_hardsig(0.0, 1.5, 1.0, 1.0) == pytest.approx(1.5)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            solve_z_hardsig(0.0, np.inf, 1.0, 1.0)


class TestSolveZGrid:
    def test_exact_fit(self):
        z = solve_z_grid(RELU, 1.0, 1.0, 1.0, 1.0, -5.0, 5.0, 1e-3)
        assert z == pytest.approx(1.0, abs=1e-3)

    def test_matches_relu_closed_form(self):
        z = solve_z_grid(RELU, 1.0, -1.0, 1.0, 1.0, -5.0, 5.0, 1e-3)
        assert z == pytest.approx(-1.0, abs=1e-3)

    def test_matches_hardsig_closed_form(self):
        z = solve_z_grid(HARD_SIGMOID, 0.0, 1.5, 1.0, 1.0, -5.0, 5.0, 1e-3)
        assert z == pytest.approx(1.5, abs=1e-3)

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            solve_z_grid(RELU, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, 1e-3)


def _random_instances(n, seed):
    rng = np.random.default_rng(seed)
    return (
        rng.uniform(-3, 3, n),
        rng.uniform(-3, 3, n),
        rng.uniform(0.1, 10, n),
        rng.uniform(0.1, 10, n),
    )


@pytest.mark.parametrize(
    "closed_form,h",
    [(solve_z_relu_matrix, RELU), (solve_z_hardsig_matrix, HARD_SIGMOID)],
    ids=["relu", "hardsig"],
)
def test_oracle_equivalence(closed_form, h):
    # objective comparison, not argmin: plateaus admit multiple minimizers
    a, w, gamma, beta = _random_instances(500, seed=42)
    z = closed_form(a, w, gamma, beta)
    obj = gamma * (a - h(z)) ** 2 + beta * (z - w) ** 2
    oracle = grid_oracle.min_objective_activation(h, a, w, gamma, beta)
    assert np.all(obj <= oracle + 1e-9)


@pytest.mark.parametrize("solver,h", [(solve_z_relu, RELU), (solve_z_hardsig, HARD_SIGMOID)],
                         ids=["relu", "hardsig"])
class TestSharedProperties:
    def test_exact_fit_zero_objective(self, solver, h):
        rng = np.random.default_rng(9)
        for w in rng.uniform(-3, 3, 50):
            a = float(h(w))
            z = solver(a, w, 2.0, 3.0)
            assert objective(h, a, w, 2.0, 3.0, z) == pytest.approx(0.0, abs=1e-12)

    def test_exact_fit_recovers_w_on_strict_pieces(self, solver, h):
        for w in (0.25, 0.75, 2.0) if h is RELU else (0.25, 0.75):
            assert solver(float(h(w)), w, 1.0, 1.0) == pytest.approx(w)

    def test_scale_covariance(self, solver, h):
        rng = np.random.default_rng(13)
        for _ in range(50):
            a, w = rng.uniform(-3, 3, 2)
            g, b = rng.uniform(0.1, 10, 2)
            assert solver(a, w, g, b) == pytest.approx(solver(a, w, 7.0 * g, 7.0 * b), rel=1e-12, abs=1e-12)


def test_matrix_solver_matches_scalar():
    a, w, gamma, beta = _random_instances(200, seed=77)
    zs = solve_z_relu_matrix(a, w, gamma[0], beta[0])
    for i in range(0, 200, 17):
        assert zs[i] == solve_z_relu(a[i], w[i], gamma[0], beta[0])
    zs = solve_z_hardsig_matrix(a, w, gamma[0], beta[0])
    for i in range(0, 200, 17):
        assert zs[i] == solve_z_hardsig(a[i], w[i], gamma[0], beta[0])


def test_solve_z_matrix_tabulated_tracks_grid():
    grid = np.linspace(-3, 3, 61)
    h = Activation("tabulated", grid=grid, values=np.tanh(grid))
    A = np.array([[0.5, -0.5]])
    W = np.array([[1.0, -1.0]])
    out = act.solve_z_matrix(h, A, W, 1.0, 1.0)
    for a_i, w_i, z_i in zip(A.ravel(), W.ravel(), out.ravel()):
        direct = solve_z_grid(h, a_i, w_i, 1.0, 1.0, -4.0, 4.0, 0.0125)
        assert objective(h, a_i, w_i, 1.0, 1.0, z_i) <= (
            objective(h, a_i, w_i, 1.0, 1.0, direct) + 1e-9
        )
