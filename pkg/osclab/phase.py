"""
Homogeneous polynomial phases for the Oscillatory Operator Laboratory
Evaluates phases and their partial derivatives, factors the mixed Hessian
into real lines and positive definite quadratics, and sorts dyadic index
pairs into the X / Delta / Y regions
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple, Union

import numpy as np
from numpy.polynomial import polynomial as poly

from .config import PHASE
from .errors import DegenerateHessian, InvalidPhase, RootIsolationFailure

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class HomogeneousPhase:
    """S(x, y) = sum_{k=1}^{n-1} a_k x^{n-k} y^k with a_1 * a_{n-1} != 0"""
    degree: int
    coeffs: Tuple[float, ...]

    def __post_init__(self):
        if isinstance(self.degree, bool) or int(self.degree) != self.degree or self.degree < 2:
            raise InvalidPhase(f"Phase degree must be an integer >= 2, got {self.degree}")
        object.__setattr__(self, 'degree', int(self.degree))
        object.__setattr__(self, 'coeffs', tuple(float(a) for a in self.coeffs))

        if len(self.coeffs) != self.degree - 1:
            raise InvalidPhase(
                f"Degree {self.degree} needs {self.degree - 1} coefficients, got {len(self.coeffs)}"
            )
        if not all(np.isfinite(self.coeffs)):
            raise InvalidPhase("Phase coefficients must be finite")
        if self.coeffs[0] == 0 or self.coeffs[-1] == 0:
            raise InvalidPhase("Extreme coefficients a_1 and a_{n-1} must be nonzero")

    @property
    def monomials(self) -> List[Tuple[float, int, int]]:
        """(a_k, power of x, power of y) for every term"""
        n = self.degree
        return [(a, n - k, k) for k, a in enumerate(self.coeffs, start=1)]

    def evaluate(self, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        return eval_phase(self, x, y)

    def partial(self, dx: int, dy: int, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        return partial(self, dx, dy, x, y)

    def hessian(self, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        """Mixed second derivative S''_xy"""
        return partial(self, 1, 1, x, y)

    def negated(self) -> 'HomogeneousPhase':
        return HomogeneousPhase(self.degree, tuple(-a for a in self.coeffs))

    def to_spec(self) -> dict:
        return {'degree': self.degree, 'coeffs': list(self.coeffs)}

    def __str__(self) -> str:
        terms = []
        for a, px, py in self.monomials:
            if a == 0:
                continue
            body = '*'.join(
                part for part in (
                    _power_str('x', px),
                    _power_str('y', py)
                ) if part
            )
            terms.append(f"{a:g}*{body}")
        return ' + '.join(terms).replace('+ -', '- ')


def _power_str(var: str, power: int) -> str:
    if power == 0:
        return ''
    return var if power == 1 else f"{var}^{power}"


def _finish(total: np.ndarray) -> ArrayLike:
    return float(total) if np.ndim(total) == 0 else total


def eval_phase(phase: HomogeneousPhase, x: ArrayLike, y: ArrayLike) -> ArrayLike:
    """
    Evaluate S(x, y) by direct monomials

    Args:
        phase: Homogeneous phase
        x: Scalar or array of x values
        y: Scalar or array of y values (broadcast against x)

    Returns:
        S(x, y) with the broadcast shape of x and y
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    total = np.zeros(np.broadcast(x, y).shape)
    for a, px, py in phase.monomials:
        if a != 0:
            total = total + a * x ** px * y ** py
    return _finish(total)


def partial(phase: HomogeneousPhase, dx: int, dy: int, x: ArrayLike, y: ArrayLike) -> ArrayLike:
    """
    Exact partial derivative d^{dx+dy} S / dx^dx dy^dy

    Coefficients are differentiated symbolically (falling factorials) and the
    resulting polynomial is evaluated numerically. Orders beyond the degree give 0.
    """
    if dx < 0 or dy < 0:
        raise ValueError("Derivative orders must be nonnegative")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    total = np.zeros(np.broadcast(x, y).shape)
    for a, px, py in phase.monomials:
        if a == 0 or dx > px or dy > py:
            continue
        c = a * math.perm(px, dx) * math.perm(py, dy)
        total = total + c * x ** (px - dx) * y ** (py - dy)
    return _finish(total)


def hessian_coefficients(phase: HomogeneousPhase) -> np.ndarray:
    """
    Coefficients b_i of S''_xy = sum_i b_i x^{n-2-i} y^i, i = 0..n-2

    Returns:
        Array of length n-1, ascending in the power of y
    """
    n = phase.degree
    return np.array([
        phase.coeffs[i] * (n - i - 1) * (i + 1)
        for i in range(n - 1)
    ])


@dataclass(frozen=True)
class HessianFactorization:
    """
    S''_xy = c * x^{x_power} * prod (y - alpha_l x)^{m_l} * prod Q_l(x, y)

    linear_factors holds (alpha_l, m_l) with alphas strictly increasing;
    quad_factors holds (A, B, C) with Q = A x^2 + B xy + C y^2 positive definite,
    repeated once per multiplicity.
    """
    leading: float
    linear_factors: Tuple[Tuple[float, int], ...]
    quad_factors: Tuple[Tuple[float, float, float], ...]
    x_power: int = 0
    cluster_tol: float = PHASE['cluster_tol']

    @property
    def alphas(self) -> List[float]:
        return [alpha for alpha, _ in self.linear_factors]

    @property
    def total_degree(self) -> int:
        return sum(m for _, m in self.linear_factors) + 2 * len(self.quad_factors) + self.x_power

    def evaluate(self, x: ArrayLike, y: ArrayLike) -> ArrayLike:
        """Rebuild S''_xy from the factors"""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        value = self.leading * np.ones(np.broadcast(x, y).shape)
        if self.x_power:
            value = value * x ** self.x_power
        for alpha, m in self.linear_factors:
            value = value * (y - alpha * x) ** m
        for A, B, C in self.quad_factors:
            value = value * (A * x * x + B * x * y + C * y * y)
        return _finish(value)

    def __str__(self) -> str:
        parts = [f"{self.leading:g}"]
        if self.x_power:
            parts.append(_power_str('x', self.x_power))
        for alpha, m in self.linear_factors:
            parts.append(_with_power(_linear_str(alpha), m))
        for quad in _count_repeats(self.quad_factors):
            (A, B, C), m = quad
            parts.append(_with_power(_quad_str(A, B, C), m))
        return ' * '.join(parts)


def _coef_str(value: float, var: str, first: bool) -> str:
    sign = '-' if value < 0 else ('' if first else '+')
    magnitude = abs(value)
    body = var if magnitude == 1 else f"{magnitude:g}{var}"
    return sign + body


def _linear_str(alpha: float) -> str:
    if alpha == 0:
        return 'y'
    return 'y' + _coef_str(-alpha, 'x', first=False)


def _quad_str(A: float, B: float, C: float) -> str:
    terms = []
    for value, var in ((A, 'x^2'), (B, 'xy'), (C, 'y^2')):
        if value != 0:
            terms.append(_coef_str(value, var, first=not terms))
    return ''.join(terms)


def _with_power(body: str, m: int) -> str:
    if body == 'y' and m == 1:
        return 'y'
    text = body if body == 'y' else f"({body})"
    return text if m == 1 else f"{text}^{m}"


def _count_repeats(items) -> List[Tuple[tuple, int]]:
    counted = []
    for item in items:
        if counted and counted[-1][0] == item:
            counted[-1] = (item, counted[-1][1] + 1)
        else:
            counted.append((item, 1))
    return counted


def _newton_polish(c: np.ndarray, root: complex, steps: int) -> complex:
    dc = poly.polyder(c)
    value = poly.polyval(root, c)
    for _ in range(steps):
        slope = poly.polyval(root, dc)
        if slope == 0:
            break
        candidate = root - value / slope
        candidate_value = poly.polyval(candidate, c)
        if abs(candidate_value) >= abs(value):
            break
        root, value = candidate, candidate_value
    return root


def _abs_scale(c: np.ndarray, root: complex) -> float:
    return float(np.sum(np.abs(c) * np.abs(root) ** np.arange(len(c)))) or 1.0


def _isolate_roots(c: np.ndarray, tol: float, steps: int) -> List[Tuple[complex, int]]:
    """
    Roots of the ascending-coefficient polynomial c with multiplicities

    Companion-matrix eigenvalues are Newton polished, grouped at the coarse
    radius sqrt(tol) (perturbed multiple roots spread like eps^{1/m}), and
    every group of size m is confirmed by p, p', ..., p^{(m-1)} vanishing at
    the refined center to relative tolerance tol.
    """
    raw = [_newton_polish(c, complex(r), steps) for r in poly.polyroots(c)]
    raw.sort(key=lambda z: (round(z.real, 12), z.imag))

    coarse = math.sqrt(tol)
    groups: List[List[complex]] = []
    for r in raw:
        for members in groups:
            center = complex(np.mean(members))
            if abs(r - center) <= coarse * (1 + abs(center)):
                members.append(r)
                break
        else:
            groups.append([r])

    roots = []
    for members in groups:
        m = len(members)
        center = complex(np.mean(members))
        if m > 1:
            derived = poly.polyder(c, m - 1)
            center = _newton_polish(derived, center, 4 * steps)
            for order in range(m):
                dc = poly.polyder(c, order) if order else c
                residual = abs(poly.polyval(center, dc))
                if residual > tol * _abs_scale(dc, center):
                    raise RootIsolationFailure(
                        f"{m} roots cluster near {center:.6g} but multiplicity {m} "
                        f"is not confirmed (order-{order} residual {residual:.3g}, "
                        f"clustering tolerance {tol:g})"
                    )
            logger.debug(f"Clustered {m} roots at {center:.12g}")
        roots.append((center, m))
    return roots


def _quadratic_factor(root: complex, tol: float) -> List[Tuple[str, tuple]]:
    """Pair root with its conjugate; split again if the quadratic is indefinite"""
    real = root.real if abs(root.real) > tol * (1 + abs(root)) else 0.0
    A, B, C = abs(root) ** 2, -2.0 * real, 1.0
    if A > 0 and B * B - 4 * A * C < 0:
        return [('quad', (A, B, C))]
    logger.warning(f"Quadratic from root {root:.6g} is not positive definite; splitting")
    disc = math.sqrt(max(B * B - 4 * A * C, 0.0))
    return [('linear', ((-B - disc) / 2, 1)), ('linear', ((-B + disc) / 2, 1))]


def factor_hessian(phase: HomogeneousPhase, cluster_tol: float = None) -> HessianFactorization:
    """
    Factor S''_xy into real lines and positive definite quadratic forms

    Roots of p(t) = S''_xy(1, t) give the lines y = alpha x; complex conjugate
    pairs become positive definite quadratics; a root at t = 0 is the line
    alpha = 0 and a degree deficit of p is a pure power of x.

    Args:
        phase: Valid homogeneous phase
        cluster_tol: Relative clustering tolerance for repeated roots

    Returns:
        HessianFactorization

    Raises:
        DegenerateHessian: S''_xy vanishes identically
        RootIsolationFailure: multiplicities are ambiguous at the tolerance
    """
    tol = PHASE['cluster_tol'] if cluster_tol is None else cluster_tol
    b = hessian_coefficients(phase)
    nonzero = np.nonzero(b)[0]
    if len(nonzero) == 0:
        raise DegenerateHessian(f"Mixed Hessian of {phase} vanishes identically")

    low, top = int(nonzero[0]), int(nonzero[-1])
    leading = float(b[top])
    x_power = (phase.degree - 2) - top
    reduced = b[low:top + 1] / leading

    linear = {}
    quads = []
    if low:
        linear[0.0] = low

    if len(reduced) > 1:
        roots = _isolate_roots(reduced, tol, PHASE['newton_steps'])
        upper = [(r, m) for r, m in roots if r.imag > tol * (1 + abs(r))]
        lower = [(r, m) for r, m in roots if r.imag < -tol * (1 + abs(r))]
        if sorted(m for _, m in upper) != sorted(m for _, m in lower):
            raise RootIsolationFailure("Complex roots of S''_xy(1, t) do not pair into conjugates")

        for r, m in roots:
            if abs(r.imag) <= tol * (1 + abs(r)):
                alpha = float(r.real)
                linear[alpha] = linear.get(alpha, 0) + m
        for r, m in upper:
            for kind, payload in _quadratic_factor(r, tol):
                if kind == 'quad':
                    quads.extend([payload] * m)
                else:
                    alpha, mult = payload
                    linear[alpha] = linear.get(alpha, 0) + mult * m

    fact = HessianFactorization(
        leading=leading,
        linear_factors=tuple(sorted(linear.items())),
        quad_factors=tuple(quads),
        x_power=x_power,
        cluster_tol=tol
    )
    if fact.total_degree != phase.degree - 2:
        raise RootIsolationFailure(
            f"Factor degrees sum to {fact.total_degree}, expected {phase.degree - 2}"
        )
    return fact


def compute_K_threshold(fact: HessianFactorization) -> int:
    """
    Smallest integer K >= 2 with 2^K >= 4 * max(1, |alpha_l|, 1/|alpha_l|)

    For j > k + K the y-monomial dominates every linear factor on the dyadic
    box (|y| >= 2 |alpha_l x|), and symmetrically for j < k - K.
    """
    magnitudes = [abs(alpha) for alpha in fact.alphas]
    largest = max([1.0] + magnitudes + [1.0 / a for a in magnitudes if a > 0])
    threshold = 2
    while 2.0 ** threshold < 4.0 * largest:
        threshold += 1
    return threshold


class Region(Enum):
    X = 'X'
    DELTA = 'Delta'
    Y = 'Y'

    @classmethod
    def parse(cls, text: Union[str, 'Region']) -> 'Region':
        if isinstance(text, Region):
            return text
        for region in cls:
            if region.value.lower() == str(text).strip().lower():
                return region
        if str(text).strip().lower() in ('d', 'δ'):
            return cls.DELTA
        raise ValueError(f"Unknown region '{text}', expected X, Delta or Y")


def classify(j: int, k: int, threshold: int) -> Region:
    """Y if j > k + threshold, X if j < k - threshold, Delta otherwise"""
    if j > k + threshold:
        return Region.Y
    if j < k - threshold:
        return Region.X
    return Region.DELTA


@dataclass(frozen=True)
class DyadicIndex:
    """Dyadic piece T_{j,k}^{sigma_x, sigma_y}: x ~ sigma_x 2^{-j}, y ~ sigma_y 2^{-k}"""
    j: int
    k: int
    sigma_x: int = 1
    sigma_y: int = 1
    region: Region = Region.DELTA

    def __post_init__(self):
        if self.sigma_x not in (1, -1) or self.sigma_y not in (1, -1):
            raise ValueError("Dyadic signs must be +1 or -1")

    @classmethod
    def build(cls, j: int, k: int, threshold: int, sigma_x: int = 1, sigma_y: int = 1) -> 'DyadicIndex':
        return cls(j, k, sigma_x, sigma_y, classify(j, k, threshold))


def hessian_box_range(phase: HomogeneousPhase, j: int, k: int, samples: int = None) -> Tuple[float, float]:
    """
    Range of |S''_xy| over the dyadic box |x| in [2^{-j-1}, 2^{-j+1}],
    |y| in [2^{-k-1}, 2^{-k+1}] (all sign quadrants)

    Returns:
        Tuple of (minimum, maximum) of |S''_xy| over the sample grid
    """
    samples = samples or PHASE['box_samples']
    xs = np.ldexp(np.linspace(0.5, 2.0, samples), -j)
    ys = np.ldexp(np.linspace(0.5, 2.0, samples), -k)
    X, Y = np.meshgrid(np.concatenate([xs, -xs]), np.concatenate([ys, -ys]), indexing='ij')
    values = np.abs(phase.hessian(X, Y))
    return float(values.min()), float(values.max())
