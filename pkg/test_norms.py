import unittest
import logging
import math
import warnings

import numpy as np
import pytest
from scipy import linalg

from osclab.errors import ResolutionInadequate
from osclab.norms import (
    DiscretizedOperator, GridSpec, SchurBounds, check_resolution, discretize,
    grid_for_lambda, lp_norm, matrix_schur_bound, opnorm2, opnorm_p_lower,
    scaled_bumps, schur_bounds, weak_l1_quasinorm
)
from osclab.operator import OperatorConfig
from osclab.phase import HomogeneousPhase
from osclab.weights import SingularKernel

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)


def make_config(lam=8.0, quad_tol=1e-8):
    return OperatorConfig(HomogeneousPhase(4, (1.0, 0.0, 1.0)), SingularKernel(mu=0.5), lam, quad_tol=quad_tol)


def random_operator(size=12, seed=1):
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return DiscretizedOperator(matrix=matrix, grids=GridSpec.uniform(size))


class TestGridSpec(unittest.TestCase):
    def test_uniform(self):
        grid = GridSpec.uniform(10)
        self.assertEqual(grid.shape, (10, 10))
        self.assertTrue(np.all(grid.x_weights > 0))
        self.assertAlmostEqual(grid.x_weights.sum(), 10 / 11)
        self.assertGreater(grid.x_nodes.min(), -0.5)

    def test_validation(self):
        nodes = np.array([0.1, 0.0])
        with self.assertRaises(ValueError):
            GridSpec(nodes, nodes, np.ones(2), np.ones(2))
        with self.assertRaises(ValueError):
            GridSpec(np.array([0.0, 0.7]), np.array([0.0, 0.1]), np.ones(2), np.ones(2))
        with self.assertRaises(ValueError):
            GridSpec.uniform(1)

    def test_grid_grows_with_lambda(self):
        small = grid_for_lambda(make_config(lam=8.0), base_size=16)
        large = grid_for_lambda(make_config(lam=2048.0), base_size=16)
        self.assertEqual(small.shape[0], 16)
        self.assertGreater(large.shape[0], 16)


class TestNormEstimators(unittest.TestCase):
    def test_power_iteration_matches_svd(self):
        A = random_operator()
        estimate = opnorm2(A)
        exact = linalg.svd(A.similarity(), compute_uv=False)[0]
        print(f"\nPower iteration {estimate.value:.10f} vs SVD {exact:.10f}")
        self.assertTrue(estimate.converged)
        self.assertAlmostEqual(estimate.value, exact, places=7)

    def test_p2_lower_bound_reaches_two_norm(self):
        A = random_operator()
        two = opnorm2(A).value
        lower = opnorm_p_lower(A, 2.0, restarts=2).value
        self.assertLessEqual(lower, two * (1 + 1e-6))
        self.assertGreaterEqual(lower, two * (1 - 1e-6))

    def test_rank_one_positive_matrix(self):
        """The all-ones kernel has L^p norm equal to the total mass for every p"""
        grid = GridSpec.uniform(20)
        A = DiscretizedOperator(matrix=np.ones((20, 20)), grids=grid)
        mass = grid.x_weights.sum()
        for p in (1.5, 3.0):
            self.assertAlmostEqual(opnorm_p_lower(A, p, restarts=1).value, mass, places=8)
            self.assertAlmostEqual(matrix_schur_bound(A, p), mass, places=12)

    def test_lower_bound_below_schur(self):
        A = random_operator(seed=7)
        for p in (1.3, 4.0):
            self.assertLessEqual(opnorm_p_lower(A, p, restarts=3).value, matrix_schur_bound(A, p) * (1 + 1e-9))

    def test_invalid_p(self):
        with self.assertRaises(ValueError):
            opnorm_p_lower(random_operator(), 1.0)

    def test_power_iteration_at_64(self):
        A = random_operator(size=64, seed=2)
        exact = linalg.svd(A.similarity(), compute_uv=False)[0]
        estimate = opnorm2(A)
        self.assertTrue(estimate.converged)
        self.assertLessEqual(abs(estimate.value - exact), 1e-8 * exact)

    def test_p3_against_sphere_sampling(self):
        """4x4 real matrix: the p = 3 lower bound is within 1% of the best of 10^6 random unit vectors"""
        rng = np.random.default_rng(3)
        A = DiscretizedOperator(matrix=rng.standard_normal((4, 4)), grids=GridSpec.uniform(4))
        wx, wy = A.grids.x_weights, A.grids.y_weights
        F = rng.standard_normal((1_000_000, 4))
        images = (F * wy) @ A.matrix.T
        ratios = (np.abs(images) ** 3 @ wx) ** (1 / 3) / (np.abs(F) ** 3 @ wy) ** (1 / 3)
        sampled = ratios.max()
        lower = opnorm_p_lower(A, 3.0).value
        print(f"\np=3: power method {lower:.8f}, sphere sampling {sampled:.8f}")
        self.assertLess(abs(lower - sampled) / sampled, 0.01)

    def test_real_matrices_use_real_starts(self):
        A = DiscretizedOperator(matrix=np.random.default_rng(5).standard_normal((12, 12)), grids=GridSpec.uniform(12))
        self.assertTrue(np.isrealobj(opnorm2(A).vector))
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            estimate = opnorm_p_lower(A, 3.0, restarts=2)
        self.assertTrue(np.isrealobj(estimate.vector))

    def test_scaled_bumps_see_the_grid(self):
        nodes = GridSpec.uniform(64).y_nodes
        spacing = np.min(np.diff(nodes))
        bumps = scaled_bumps(nodes)
        self.assertEqual(len(bumps), 18)
        for bump in bumps:
            self.assertGreaterEqual(0.5 * (bump.hi - bump.lo), 2 * spacing - 1e-15)
            self.assertTrue(np.any(bump(nodes)))


def test_lp_norm_and_weak_l1():
    assert lp_norm([1.0, 2.0], [1.0, 1.0], 2) == pytest.approx(math.sqrt(5))
    assert lp_norm([1.0, -2.0], [1.0, 1.0], math.inf) == 2.0
    assert weak_l1_quasinorm([4.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0]) == 4.0
    with pytest.raises(ValueError):
        lp_norm([1.0], [1.0], 0.5)


def test_schur_bounds_formulas():
    bounds = SchurBounds(A1=4.0, A2=1.0)
    assert bounds.p_bound(2.0) == pytest.approx(2.0)
    assert bounds.linear_bound(2.0) == pytest.approx(2.5)
    assert bounds.p_bound(math.inf) == 4.0
    # weighted AM-GM
    for p in (1.2, 3.0, 7.0):
        assert bounds.p_bound(p) <= bounds.linear_bound(p) + 1e-12


def test_discretize_split_and_budget():
    cfg = make_config()
    grid = GridSpec.uniform(16)
    T = discretize(cfg, 'T', grid)
    T1 = discretize(cfg, 'T1', grid, threads=2)
    T2 = discretize(cfg, 'T2', grid)
    assert T.matrix.shape == (16, 16)
    np.testing.assert_allclose(T.matrix, T1.matrix + T2.matrix, rtol=1e-12, atol=1e-14)
    assert T1.error_budget > 0
    assert T2.error_budget == 0.0
    assert T.adjoint().variant == 'T*'


def test_adjoint_pairing():
    """<A f, g>_x = <f, A* g>_y with the weighted inner products"""
    A = random_operator(size=9, seed=4)
    rng = np.random.default_rng(0)
    f = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    g = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    left = np.vdot(g, A.grids.x_weights * A.apply(f))
    right = np.vdot(A.apply_adjoint(g), A.grids.y_weights * f)
    assert left == pytest.approx(right, rel=1e-10)


def test_resolution_check():
    cfg = make_config()
    diagnostics = check_resolution(cfg, 'T2', 16, tol=10.0)
    assert diagnostics['fine_size'] == 32
    with pytest.raises(ResolutionInadequate) as excinfo:
        check_resolution(cfg, 'T2', 16, tol=1e-12)
    assert excinfo.value.diagnostics['coarse_size'] == 16


def test_schur_bounds_symmetric_operator():
    bounds = schur_bounds(make_config(quad_tol=1e-6), 'T1')
    print(f"\nA1={bounds.A1:.6f} at x={bounds.x_star:.3f}, A2={bounds.A2:.6f} at y={bounds.y_star:.3f}")
    assert bounds.A1 > 0
    assert bounds.A2 == pytest.approx(bounds.A1, rel=1e-6)
    assert bounds.p_bound(2.0) <= bounds.linear_bound(2.0) + 1e-12
