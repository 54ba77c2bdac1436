"""
Tests for the adaptive oscillatory quadrature and its oracle
"""

import itertools
import math

import numpy as np
import pytest

from osclab.errors import BudgetExceeded
from osclab.operator import OperatorConfig, SampledFunction, Variant, integrand_spec
from osclab.phase import HomogeneousPhase
from osclab.quad import IntegrandSpec, integrate, oracle_integrate
from osclab.weights import SingularKernel


def _ones(y):
    return np.ones_like(y)


def _plane_wave(lam):
    return IntegrandSpec(amplitude=_ones, a=-1.0, b=1.0, phase_fn=lambda y: lam * y, osc_scale=1.1 * lam)


def test_plane_wave():
    """integral_{-1}^{1} e^{i lam y} dy = 2 sin(lam) / lam"""
    lam = 50.0
    result = integrate(_plane_wave(lam), tol=1e-10)
    assert result.converged
    assert abs(result.value - 2 * math.sin(lam) / lam) < 1e-9
    assert result.abs_error_estimate <= 1e-10


def test_endpoint_singularity():
    spec = IntegrandSpec(amplitude=lambda y: y ** -0.5, a=0.0, b=1.0,
                         singular_points=(0.0,), singular_exponents=(0.5,))
    result = integrate(spec, tol=1e-9)
    assert result.converged
    assert result.value.real == pytest.approx(2.0, abs=1e-7)
    assert abs(result.value.imag) < 1e-12


def test_interior_singularity():
    spec = IntegrandSpec(amplitude=lambda y: np.abs(y) ** -0.5, a=-1.0, b=1.0,
                         singular_points=(0.0,), singular_exponents=(0.5,))
    result = integrate(spec, tol=1e-9)
    assert result.value.real == pytest.approx(4.0, abs=1e-7)


def test_oracle_agrees_on_singular_oscillatory_integrand():
    spec = IntegrandSpec(amplitude=lambda y: np.abs(y - 0.3) ** -0.4, a=0.0, b=1.0,
                         phase_fn=lambda y: 20.0 * y, osc_scale=22.0,
                         singular_points=(0.3,), singular_exponents=(0.4,))
    fast = integrate(spec, tol=1e-10)
    reference = oracle_integrate(spec)
    print(f"\nadaptive {fast.value:.12f}, oracle {reference:.12f}")
    assert abs(fast.value - reference) < 1e-6


def test_oracle_plane_wave():
    lam = 50.0
    assert abs(oracle_integrate(_plane_wave(lam), levels=9) - 2 * math.sin(lam) / lam) < 1e-6


def test_oracle_exact_for_graded_power():
    """y = t^4 turns y^{-1/2} dy into 4 t dt, which Simpson integrates exactly"""
    spec = IntegrandSpec(amplitude=lambda y: y ** -0.5, a=0.0, b=1.0,
                         singular_points=(0.0,), singular_exponents=(0.5,))
    assert oracle_integrate(spec, levels=4) == pytest.approx(2.0, abs=1e-12)


def test_breakpoints_handle_indicator():
    spec = IntegrandSpec(amplitude=lambda y: ((y >= 0.2) & (y <= 0.7)).astype(float), a=0.0, b=1.0,
                         breakpoints=(0.2, 0.7))
    assert integrate(spec, tol=1e-12).value.real == pytest.approx(0.5, abs=1e-12)


def test_budget():
    """A panel budget too small for the oscillation is reported or raised"""
    spec = _plane_wave(200.0)
    result = integrate(spec, tol=1e-14, max_panels=4)
    assert not result.converged
    with pytest.raises(BudgetExceeded) as excinfo:
        integrate(spec, tol=1e-14, max_panels=4, strict=True)
    assert excinfo.value.result is not None


def test_spec_validation():
    with pytest.raises(ValueError):
        IntegrandSpec(amplitude=_ones, a=1.0, b=0.0)
    with pytest.raises(ValueError):
        IntegrandSpec(amplitude=_ones, a=0.0, b=1.0, singular_points=(0.5,), singular_exponents=(1.0,))
    with pytest.raises(ValueError):
        IntegrandSpec(amplitude=_ones, a=0.0, b=1.0, singular_points=(2.0,))
    with pytest.raises(ValueError):
        integrate(IntegrandSpec(amplitude=_ones, a=0.0, b=1.0), tol=0.0)


def _operator_corpus(count=50, seed=11):
    """T integrands at random x for n in {3, 4}, mu in {0.3, 0.5, 0.7} and lam <= 100"""
    rng = np.random.default_rng(seed)
    phases = (HomogeneousPhase(3, (1.0, 1.0)), HomogeneousPhase(4, (1.0, 0.0, 1.0)))
    combos = list(itertools.product(phases, (0.3, 0.5, 0.7)))
    corpus = []
    while len(corpus) < count:
        phase, mu = combos[len(corpus) % len(combos)]
        cfg = OperatorConfig(phase, SingularKernel(mu=mu), rng.uniform(5.0, 100.0), quad_tol=1e-8)
        f = SampledFunction.indicator(rng.uniform(-0.45, 0.0), rng.uniform(0.05, 0.45))
        spec = integrand_spec(cfg, Variant('T'), f, rng.uniform(-0.45, 0.45))
        if spec is not None:
            corpus.append((cfg, spec))
    return corpus


def test_operator_integrands_against_oracle():
    corpus = _operator_corpus()
    assert len(corpus) == 50
    worst = 0.0
    for cfg, spec in corpus:
        fast = integrate(spec, tol=1e-8)
        reference = oracle_integrate(spec)
        difference = abs(fast.value - reference)
        worst = max(worst, difference)
        assert difference <= 1e-6, f"n={cfg.degree} mu={cfg.kernel.mu} lam={cfg.lam:.2f}: {fast.value} vs {reference}"
    print(f"\nworst |integrate - oracle| over {len(corpus)} operator integrands: {worst:.2e}")
