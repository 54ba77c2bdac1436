"""
Adaptive quadrature for oscillatory, weakly singular integrands on an interval
Computes integral_a^b amplitude(y) exp(i phase(y)) dy with Gauss-Legendre
panels, geometric grading toward integrable singularities and a slow
composite-Simpson oracle for cross-checking
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np
from scipy import special

from .config import QUAD
from .errors import BudgetExceeded

logger = logging.getLogger(__name__)

Function = Callable[[np.ndarray], np.ndarray]


def _zero_phase(y: np.ndarray) -> np.ndarray:
    return np.zeros_like(y)


@dataclass
class IntegrandSpec:
    """
    One-dimensional integrand amplitude(y) * exp(i * phase_fn(y)) on [a, b]

    singular_points are where the amplitude may blow up like
    |y - s|^{-exponent} (exponent < 1) with constant singular_bound;
    breakpoints are known kinks (indicator endpoints, cutoff bands);
    osc_scale bounds |phase_fn'| on [a, b].
    """
    amplitude: Function
    a: float
    b: float
    phase_fn: Function = _zero_phase
    singular_points: Tuple[float, ...] = ()
    singular_exponents: Tuple[float, ...] = ()
    osc_scale: float = 0.0
    breakpoints: Tuple[float, ...] = ()
    singular_bound: float = 1.0

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"Integration interval needs a < b, got [{self.a}, {self.b}]")
        self.singular_points = tuple(float(s) for s in self.singular_points)
        if not self.singular_exponents:
            self.singular_exponents = tuple(0.0 for _ in self.singular_points)
        self.singular_exponents = tuple(float(e) for e in self.singular_exponents)
        if len(self.singular_exponents) != len(self.singular_points):
            raise ValueError("singular_exponents must match singular_points")
        for s, e in zip(self.singular_points, self.singular_exponents):
            if not self.a <= s <= self.b:
                raise ValueError(f"Singular point {s} lies outside [{self.a}, {self.b}]")
            if not 0 <= e < 1:
                raise ValueError(f"Singular exponent {e} is not integrable")
        if self.osc_scale < 0:
            raise ValueError("osc_scale must be nonnegative")

    def integrand(self, y: np.ndarray) -> np.ndarray:
        return self.amplitude(y) * np.exp(1j * self.phase_fn(y))


@dataclass
class QuadResult:
    value: complex
    abs_error_estimate: float
    panels_used: int
    converged: bool

    def __post_init__(self):
        if not math.isfinite(self.abs_error_estimate):
            raise ValueError("Quadrature error estimate is not finite")


@lru_cache(maxsize=None)
def _gauss_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = special.roots_legendre(order)
    return nodes, weights


def _cuts(spec: IntegrandSpec) -> List[float]:
    interior = [p for p in spec.singular_points + tuple(spec.breakpoints) if spec.a < p < spec.b]
    return sorted(set([spec.a, spec.b] + interior))


def _panel_sums(spec: IntegrandSpec, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Order-15 panel values and |order-15 - order-7| error estimates"""
    if len(lo) == 0:
        return np.zeros(0, dtype=complex), np.zeros(0)
    x_hi, w_hi = _gauss_rule(QUAD['order'])
    x_lo, w_lo = _gauss_rule(QUAD['embedded_order'])
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = np.concatenate([
        (mid[:, None] + half[:, None] * x_hi[None, :]).ravel(),
        (mid[:, None] + half[:, None] * x_lo[None, :]).ravel()
    ])
    values = spec.integrand(nodes)
    split = len(lo) * len(x_hi)
    high = half * (values[:split].reshape(len(lo), -1) @ w_hi)
    low = half * (values[split:].reshape(len(lo), -1) @ w_lo)
    return high, np.abs(high - low)


def _tail_bound(bound: float, width: float, exponent: float) -> float:
    return bound * width ** (1.0 - exponent) / (1.0 - exponent)


def _grade_segment(spec: IntegrandSpec, start: float, end: float, exponent: float,
                   h0: float, tol: float) -> Tuple[List[Tuple[float, float]], float]:
    """
    Panels on [start, end] graded geometrically toward the singular end `start`
    (end may lie on either side). Returns the panels and the width of the
    innermost excluded tail.
    """
    length = abs(end - start)
    direction = 1.0 if end > start else -1.0
    ratio = QUAD['grading_ratio']
    panels = []
    outer = length
    while True:
        inner = outer * ratio
        if inner < QUAD['min_width'] or _tail_bound(spec.singular_bound, inner, exponent) < tol / 10:
            if inner < QUAD['min_width']:
                inner = max(inner, QUAD['min_width'] * ratio)
            # last panel stops at the tail
            count = max(1, math.ceil((outer - inner) / h0))
            edges = np.linspace(inner, outer, count + 1)
            panels.extend(zip(edges[:-1], edges[1:]))
            break
        count = max(1, math.ceil((outer - inner) / h0))
        edges = np.linspace(inner, outer, count + 1)
        panels.extend(zip(edges[:-1], edges[1:]))
        outer = inner
    tail = min(p[0] for p in panels)
    oriented = []
    for p_lo, p_hi in panels:
        y0, y1 = start + direction * p_lo, start + direction * p_hi
        oriented.append((min(y0, y1), max(y0, y1)))
    return oriented, tail


def _tail_correction(spec: IntegrandSpec, point: float, width: float,
                     direction: float, exponent: float) -> Tuple[complex, float]:
    """
    Contribution of the excluded tail between `point` and point + direction*width,
    modelled as F(edge) * (width / |y - point|)^exponent, with an error estimate
    from repeating the model at half the width plus one panel.
    """
    def model(w):
        edge = point + direction * w
        # the rounded edge sits |edge - point| away, which is what the integrand sees
        return complex(spec.integrand(np.array([edge]))[0]) * abs(edge - point) / (1.0 - exponent)

    full = model(width)
    lo, hi = sorted((point + direction * width / 2, point + direction * width))
    panel, _ = _panel_sums(spec, np.array([lo]), np.array([hi]))
    refined = model(width / 2) + complex(panel[0])
    return refined, abs(refined - full)


def integrate(spec: IntegrandSpec, tol: float = None, max_panels: int = None,
              strict: bool = False) -> QuadResult:
    """
    Adaptive Gauss-Legendre quadrature of amplitude * exp(i * phase_fn)

    Initial panels are no wider than min(b - a, 2 pi / (1 + osc_scale)); panels
    next to a singular point shrink geometrically (ratio 1/2) until the tail
    bound E w^{1-mu} / (1-mu) drops below tol/10 or the width reaches 1e-14,
    and the excluded tail is added through a local power-law model. Panels
    are bisected while the summed |G15 - G7| estimate exceeds tol.

    Args:
        spec: Integrand description
        tol: Absolute tolerance
        max_panels: Panel budget
        strict: Raise BudgetExceeded instead of returning an unconverged result

    Returns:
        QuadResult
    """
    tol = QUAD['tol'] if tol is None else tol
    max_panels = QUAD['max_panels'] if max_panels is None else max_panels
    if tol <= 0:
        raise ValueError("Quadrature tolerance must be positive")

    h0 = min(spec.b - spec.a, 2 * math.pi / (1.0 + spec.osc_scale))
    cuts = _cuts(spec)
    singular = {s: e for s, e in zip(spec.singular_points, spec.singular_exponents)}

    panels: List[Tuple[float, float]] = []
    tail_value = 0j
    tail_error = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        left, right = lo in singular, hi in singular
        if left and right:
            pieces = [(lo, 0.5 * (lo + hi), singular[lo]), (hi, 0.5 * (lo + hi), singular[hi])]
        elif left:
            pieces = [(lo, hi, singular[lo])]
        elif right:
            pieces = [(hi, lo, singular[hi])]
        else:
            count = max(1, math.ceil((hi - lo) / h0))
            edges = np.linspace(lo, hi, count + 1)
            panels.extend(zip(edges[:-1], edges[1:]))
            continue
        for start, end, exponent in pieces:
            graded, tail = _grade_segment(spec, start, end, exponent, h0, tol)
            panels.extend(graded)
            direction = 1.0 if end > start else -1.0
            value, error = _tail_correction(spec, start, tail, direction, exponent)
            tail_value += value
            tail_error += error

    lo = np.array([p[0] for p in panels])
    hi = np.array([p[1] for p in panels])
    values, errors = _panel_sums(spec, lo, hi)
    span = spec.b - spec.a

    converged = False
    while True:
        total_error = float(errors.sum()) + tail_error
        if total_error <= tol:
            converged = True
            break
        room = max_panels - len(lo)
        if room <= 0:
            break
        split = errors > tol * (hi - lo) / span
        if not split.any():
            split = errors >= errors.max()
        chosen = np.nonzero(split)[0]
        if len(chosen) > room:
            chosen = chosen[np.argsort(errors[chosen])[::-1][:room]]
        keep = np.ones(len(lo), dtype=bool)
        keep[chosen] = False
        mid = 0.5 * (lo[chosen] + hi[chosen])
        new_lo = np.concatenate([lo[chosen], mid])
        new_hi = np.concatenate([mid, hi[chosen]])
        new_values, new_errors = _panel_sums(spec, new_lo, new_hi)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        values = np.concatenate([values[keep], new_values])
        errors = np.concatenate([errors[keep], new_errors])

    value = complex(math.fsum(values.real) + tail_value.real, math.fsum(values.imag) + tail_value.imag)
    result = QuadResult(
        value=value,
        abs_error_estimate=float(errors.sum()) + tail_error,
        panels_used=max(1, len(lo)),
        converged=converged
    )
    if not converged:
        message = (f"Quadrature budget of {max_panels} panels exhausted on [{spec.a:.6g}, {spec.b:.6g}] "
                   f"(error estimate {result.abs_error_estimate:.3g} > tol {tol:.3g})")
        if strict:
            raise BudgetExceeded(message, result)
        logger.warning(message)
    return result


def _simpson(values: np.ndarray, h: float) -> complex:
    weights = np.ones(len(values))
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return complex(h / 3.0 * np.dot(weights, values))


def _graded_segment_sum(spec: IntegrandSpec, start: float, end: float,
                        exponent: float, intervals: int) -> complex:
    """
    Composite Simpson in t on y = start + (end - start) t^q, q = 2/(1 - exponent);
    the node t = 0 (the singular point itself) is excised.
    """
    q = 2.0 / (1.0 - exponent)
    length = abs(end - start)
    direction = 1.0 if end > start else -1.0
    t = np.linspace(0.0, 1.0, intervals + 1)
    offset = length * t ** q
    # oriented lo -> hi whichever end is singular
    jacobian = length * q * t ** (q - 1)
    values = np.zeros(len(t), dtype=complex)
    values[1:] = spec.integrand(start + direction * offset[1:]) * jacobian[1:]
    if exponent > 0:
        # nodes closer than the floor collide with start in floating point; use F(edge) (floor/d)^exponent there
        floor = min(QUAD['oracle_floor'] * max(1.0, abs(start)), 0.5 * length)
        near = offset < floor
        near[0] = False
        if near.any():
            edge = start + direction * floor
            anchor = complex(spec.integrand(np.array([edge]))[0])
            scale = abs(edge - start) ** exponent * length ** (1.0 - exponent) * q
            values[near] = anchor * scale * t[near]
    return _simpson(values, 1.0 / intervals)


def _plain_segment_sum(spec: IntegrandSpec, lo: float, hi: float, intervals: int) -> complex:
    y = np.linspace(lo, hi, intervals + 1)
    return _simpson(spec.integrand(y), (hi - lo) / intervals)


def oracle_integrate(spec: IntegrandSpec, levels: int = None) -> complex:
    """
    Brute-force reference value for tests

    Composite Simpson on 2^levels, 2^{levels+1} and 2^{levels+2} uniform
    intervals per segment (uniform in a power-graded variable next to singular
    points, which excises the singular node), followed by Richardson
    extrapolation of the two finest pairs.
    """
    levels = QUAD['oracle_levels'] if levels is None else levels
    if levels < 3:
        raise ValueError("oracle_integrate needs levels >= 3")

    cuts = _cuts(spec)
    singular = {s: e for s, e in zip(spec.singular_points, spec.singular_exponents)}

    def total(intervals):
        acc = 0j
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            left, right = lo in singular, hi in singular
            if left and right:
                mid = 0.5 * (lo + hi)
                acc += _graded_segment_sum(spec, lo, mid, singular[lo], intervals)
                acc += _graded_segment_sum(spec, hi, mid, singular[hi], intervals)
            elif left:
                acc += _graded_segment_sum(spec, lo, hi, singular[lo], intervals)
            elif right:
                acc += _graded_segment_sum(spec, hi, lo, singular[hi], intervals)
            else:
                acc += _plain_segment_sum(spec, lo, hi, intervals)
        return acc

    coarse, middle, fine = (total(2 ** (levels + i)) for i in range(3))
    first = middle + (middle - coarse) / 15.0
    second = fine + (fine - middle) / 15.0
    logger.debug(f"Oracle Richardson change {abs(second - first):.3g}")
    return second
