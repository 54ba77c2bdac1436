import unittest
import logging

import numpy as np
import pytest

from osclab.errors import DampingSingularity
from osclab.operator import (
    DampedConfig, OperatorConfig, SampledFunction, Variant, adjoint_apply, apply_damped,
    apply_group, apply_many, apply_piece, apply_T, apply_T1, apply_T2, damping_factor,
    group_weight, kernel_weight, truncation_budget, truncation_weight
)
from osclab.phase import DyadicIndex, HomogeneousPhase, Region
from osclab.weights import SingularKernel

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s'
)


def make_config(lam=16.0, coeffs=(1.0, 0.0, 1.0), mu=0.5, **kwargs):
    phase = HomogeneousPhase(len(coeffs) + 1, coeffs)
    return OperatorConfig(phase, SingularKernel(mu=mu), lam, quad_tol=1e-8, **kwargs)


class TestSampledFunction(unittest.TestCase):
    def test_indicator(self):
        f = SampledFunction.indicator(0.125, 0.25)
        np.testing.assert_array_equal(f(np.array([0.1, 0.2, 0.3])).real, [0.0, 1.0, 0.0])
        self.assertEqual(f.breakpoints, (0.125, 0.25))
        self.assertTrue(f.is_real)

    def test_bump(self):
        f = SampledFunction.bump(0.2, 0.1)
        lo, hi = f.support
        self.assertAlmostEqual(lo, 0.1)
        self.assertAlmostEqual(hi, 0.3)
        self.assertAlmostEqual(f(np.array([0.2]))[0].real, 1.0)
        self.assertEqual(f(np.array([0.35]))[0], 0.0)

    def test_exponential_and_samples(self):
        f = SampledFunction.exponential(3.0)
        self.assertFalse(f.is_real)
        self.assertAlmostEqual(abs(f(np.array([0.4]))[0]), 1.0)

        g = SampledFunction.from_samples([0.0, 0.5], [0.0, 1.0])
        self.assertAlmostEqual(g(np.array([0.25]))[0].real, 0.5)
        self.assertEqual(g(np.array([0.6]))[0], 0.0)
        with self.assertRaises(ValueError):
            SampledFunction.from_samples([0.5, 0.0], [1.0, 1.0])

    def test_zero(self):
        self.assertIsNone(SampledFunction.zero().support)
        self.assertEqual(apply_T(make_config(), SampledFunction.zero(), 0.1), 0j)


class TestVariant(unittest.TestCase):
    def test_parse_and_format(self):
        self.assertEqual(str(Variant.parse('damped:Y:0.5+1j')), 'damped:Y:0.5+1j')
        self.assertEqual(str(Variant.parse('piece:2,3')), 'piece:2,3,1,1')
        self.assertEqual(Variant.parse('group:delta').region, Region.DELTA)
        self.assertTrue(Variant.parse('T1').has_diagonal)
        self.assertFalse(Variant.parse('T2').has_diagonal)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            Variant.parse('T3')
        with self.assertRaises(ValueError):
            Variant('damped', region=Region.DELTA, z=0.5)
        with self.assertRaises(ValueError):
            DampedConfig(make_config(), 0.5, 'Delta')


class TestOperatorConfig(unittest.TestCase):
    def test_derived_values(self):
        cfg = make_config(lam=16.0)
        self.assertAlmostEqual(cfg.delta, 0.5)
        self.assertEqual(cfg.support_radius, 0.5)
        self.assertEqual(cfg.threshold, 2)
        self.assertAlmostEqual(cfg.with_lambda(81.0).delta, 1 / 3)

    def test_validation(self):
        with self.assertRaises(ValueError):
            make_config(lam=0.0)
        with self.assertRaises(ValueError):
            make_config(quadrants=((1, 0),))
        with self.assertRaises(ValueError):
            make_config(amplitude_scale=1.0)


class TestWeights(unittest.TestCase):
    def setUp(self):
        self.cfg = make_config()
        rng = np.random.default_rng(3)
        self.x = rng.uniform(-0.5, 0.5, 400)
        self.y = rng.uniform(-0.5, 0.5, 400)

    def test_groups_cover_truncation(self):
        """X + Delta + Y weights add up to the truncated partition on every quadrant"""
        total = sum(group_weight(self.cfg, region, self.x, self.y) for region in Region)
        np.testing.assert_allclose(total, truncation_weight(self.cfg, self.x, self.y), atol=1e-12)

    def test_near_far_split(self):
        T = kernel_weight(self.cfg, Variant('T'), self.x, self.y)
        T1 = kernel_weight(self.cfg, Variant('T1'), self.x, self.y)
        T2 = kernel_weight(self.cfg, Variant('T2'), self.x, self.y)
        np.testing.assert_allclose(T, T1 + T2, rtol=1e-12)

    def test_piece_inside_its_quadrant(self):
        index = DyadicIndex.build(2, 2, self.cfg.threshold, sigma_x=1, sigma_y=-1)
        weight = kernel_weight(self.cfg, Variant('piece', index=index), self.x, self.y)
        outside = (self.x <= 0) | (self.y >= 0)
        self.assertTrue(np.all(weight[outside] == 0))

    def test_diagonal_is_zero(self):
        self.assertEqual(kernel_weight(self.cfg, Variant('T'), 0.1, 0.1), 0.0)


class TestDamping(unittest.TestCase):
    def setUp(self):
        # S''_xy = 2 (x - y) vanishes on the diagonal
        self.phase = HomogeneousPhase(3, (1.0, -1.0))

    def test_zero_exponent(self):
        np.testing.assert_array_equal(damping_factor(self.phase, 0, np.array([0.2]), np.array([0.2])), [1.0])

    def test_modulus(self):
        value = damping_factor(self.phase, 0.5 + 2j, 0.3, 0.1)
        self.assertAlmostEqual(abs(value), np.sqrt(0.4))

    def test_zero_variety(self):
        self.assertEqual(damping_factor(self.phase, 0.5, 0.2, 0.2), 0.0)
        self.assertEqual(damping_factor(self.phase, 1j, 0.2, 0.2), 0.0)
        nudged = damping_factor(self.phase, -0.25, 0.2, 0.2)
        self.assertTrue(np.isfinite(abs(nudged)) and abs(nudged) > 1.0)

    def test_unrecoverable_singularity(self):
        """3 (y - x)^2 underflows to 0 even one ulp away from the origin"""
        phase = HomogeneousPhase(4, (1.0, -1.5, 1.0))
        with self.assertRaises(DampingSingularity):
            damping_factor(phase, -0.25, 0.0, 0.0)


def test_split_T_equals_T1_plus_T2():
    cfg = make_config()
    f = SampledFunction.indicator(-0.2, 0.3)
    for x in (0.1, -0.35):
        residual = abs(apply_T(cfg, f, x) - apply_T1(cfg, f, x) - apply_T2(cfg, f, x))
        assert residual < 5 * cfg.quad_tol


def test_groups_sum_to_T2_within_budget():
    cfg = make_config()
    f = SampledFunction.indicator(-0.2, 0.3)
    x = 0.15
    groups = sum(apply_group(cfg, region, f, x) for region in ('X', 'Delta', 'Y'))
    budget = truncation_budget(cfg, f, x)
    assert abs(apply_T2(cfg, f, x) - groups) <= 5 * cfg.quad_tol + budget


def test_adjoint_of_symmetric_operator():
    """For symmetric S and K and real g, T*g = conj(T g)"""
    cfg = make_config()
    g = SampledFunction.bump(0.1, 0.2)
    assert abs(adjoint_apply(cfg, g, 0.2) - np.conj(apply_T(cfg, g, 0.2))) < 1e-6


def test_piece_and_damped_application():
    cfg = make_config()
    f = SampledFunction.indicator(-0.5, 0.5)
    index = DyadicIndex.build(1, 1, cfg.threshold)
    value = apply_piece(cfg, index, f, 0.3)
    assert np.isfinite(value)
    with pytest.raises(ValueError):
        apply_piece(cfg, DyadicIndex(20, 1), f, 0.3)

    damped = apply_damped(DampedConfig(cfg, 0.5, 'Y'), f, 0.02)
    assert np.isfinite(damped)


def test_outside_support_is_zero():
    cfg = make_config()
    f = SampledFunction.indicator(-0.5, 0.5)
    assert apply_T(cfg, f, 0.5) == 0j
    assert apply_T1(cfg, SampledFunction.indicator(0.3, 0.4), -0.3) == 0j


def test_apply_many_keeps_order():
    cfg = make_config(lam=8.0)
    f = SampledFunction.indicator(-0.2, 0.3)
    xs = [0.3, -0.1, 0.05]
    serial = [r.value for r in apply_many(cfg, Variant('T'), f, xs)]
    threaded = [r.value for r in apply_many(cfg, Variant('T'), f, xs, threads=3)]
    assert serial == threaded


def test_negated_frequency_conjugates():
    """lam -> -lam turns T f into conj(T f) for real f"""
    cfg = make_config()
    f = SampledFunction.indicator(-0.2, 0.3)
    flipped = cfg.negated()
    for x in (0.1, -0.25, 0.4):
        assert abs(apply_T(flipped, f, x) - np.conj(apply_T(cfg, f, x))) <= 5 * cfg.quad_tol


def test_apply_T_is_linear():
    cfg = make_config()
    left, right = SampledFunction.indicator(-0.2, 0.05), SampledFunction.indicator(0.05, 0.3)
    whole = SampledFunction.indicator(-0.2, 0.3)
    for x in (0.1, -0.3):
        pieces = apply_T(cfg, left, x) + apply_T(cfg, right, x)
        assert abs(pieces - apply_T(cfg, whole, x)) <= 15 * cfg.quad_tol
