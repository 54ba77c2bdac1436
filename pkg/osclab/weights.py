"""
Singular kernels and cutoff functions for the Oscillatory Operator Laboratory
Provides K(x, y), the excision bump phi, the dyadic partition Psi and a
sampling check of the kernel size and derivative conditions
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from .config import KERNEL
from .errors import DiagonalEvaluation

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Smooth bounded factors g(x, y) for modulated kernels
MODULATIONS: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    'one': lambda x, y: np.ones(np.broadcast(x, y).shape),
    'cos_sum': lambda x, y: np.cos(x + y),
    'cos_diff': lambda x, y: np.cos(x - y),
    'gauss_product': lambda x, y: np.exp(-(x * x + y * y)),
    'exp_x': lambda x, y: np.exp(-x) * np.ones(np.broadcast(x, y).shape)
}
SYMMETRIC_MODULATIONS = ('one', 'cos_sum', 'cos_diff', 'gauss_product')


@dataclass(frozen=True)
class SingularKernel:
    """
    K(x, y) = sign * |x - y|^{-mu} (family 'power') or
    K(x, y) = g(x, y) * |x - y|^{-mu} (family 'modulated', g from MODULATIONS)
    """
    mu: float
    E: float = 1.0
    family: str = 'power'
    sign: int = 1
    modulation: str = 'one'

    def __post_init__(self):
        if not 0 < self.mu < 1:
            raise ValueError(f"Kernel exponent mu must lie in (0, 1), got {self.mu}")
        if not self.E > 0:
            raise ValueError(f"Kernel constant E must be positive, got {self.E}")
        if self.family not in ('power', 'modulated'):
            raise ValueError(f"Unknown kernel family '{self.family}'")
        if self.sign not in (1, -1):
            raise ValueError("Kernel sign must be +1 or -1")
        if self.family == 'modulated' and self.modulation not in MODULATIONS:
            raise ValueError(
                f"Unknown modulation '{self.modulation}', choose from {sorted(MODULATIONS)}"
            )

    @property
    def is_symmetric(self) -> bool:
        return self.family == 'power' or self.modulation in SYMMETRIC_MODULATIONS

    def factor(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """The smooth factor multiplying |x - y|^{-mu}"""
        if self.family == 'power':
            return float(self.sign) * np.ones(np.broadcast(x, y).shape)
        return MODULATIONS[self.modulation](x, y)

    def evaluate(self, x: ArrayLike, y: ArrayLike, diagonal: Optional[float] = None) -> ArrayLike:
        """
        Evaluate K(x, y)

        Args:
            x: Scalar or array
            y: Scalar or array (broadcast against x)
            diagonal: Value used where x == y; if None such points raise

        Returns:
            K(x, y) with the broadcast shape
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        distance = np.abs(x - y)
        on_diagonal = distance == 0
        if np.any(on_diagonal):
            if diagonal is None:
                raise DiagonalEvaluation("Singular kernel evaluated on the diagonal x = y")
            distance = np.where(on_diagonal, 1.0, distance)
        values = self.factor(x, y) * distance ** (-self.mu)
        if np.any(on_diagonal):
            values = np.where(on_diagonal, diagonal, values)
        return float(values) if values.ndim == 0 else values

    def to_spec(self) -> dict:
        spec = {'family': self.family, 'mu': self.mu, 'E': self.E}
        if self.family == 'power':
            spec['sign'] = self.sign
        else:
            spec['modulation'] = self.modulation
        return spec


def eval_kernel(kernel: SingularKernel, x: float, y: float) -> float:
    """K(x, y); raises DiagonalEvaluation if x == y"""
    return kernel.evaluate(x, y)


def _smooth_step(s: np.ndarray) -> np.ndarray:
    """h(s) = exp(-1/s) for s > 0, 0 otherwise"""
    positive = s > 0
    safe = np.where(positive, s, 1.0)
    return np.where(positive, np.exp(-1.0 / safe), 0.0)


def bump_phi(x: ArrayLike) -> ArrayLike:
    """
    C-infinity bump: 1 on |x| <= 1/2, 0 on |x| >= 1, and
    h(1-t) / (h(1-t) + h(t)) with t = 2|x| - 1 on the transition band
    """
    x = np.asarray(x, dtype=float)
    t = 2.0 * np.abs(x) - 1.0
    left = _smooth_step(1.0 - t)
    right = _smooth_step(t)
    with np.errstate(invalid='ignore', divide='ignore'):
        band = left / (left + right)
    values = np.where(t <= 0, 1.0, np.where(t >= 1, 0.0, band))
    return float(values) if values.ndim == 0 else values


def dyadic_psi(x: ArrayLike) -> ArrayLike:
    """Psi(x) = phi(x/2) - phi(x), supported in 1/2 <= |x| <= 2"""
    x = np.asarray(x, dtype=float)
    values = np.asarray(bump_phi(0.5 * x)) - np.asarray(bump_phi(x))
    return float(values) if values.ndim == 0 else values


def dyadic_psi_level(level: int, x: ArrayLike) -> ArrayLike:
    """Psi(2^level x)"""
    return dyadic_psi(np.ldexp(np.asarray(x, dtype=float), level))


@dataclass(frozen=True)
class CutoffPair:
    """The excision bump phi together with the annular function Psi built from it"""
    phi: Callable[[ArrayLike], ArrayLike] = field(default=bump_phi)
    psi: Callable[[ArrayLike], ArrayLike] = field(default=dyadic_psi)

    def psi_level(self, level: int, x: ArrayLike) -> ArrayLike:
        return self.psi(np.ldexp(np.asarray(x, dtype=float), level))

    def partition_sum(self, x: ArrayLike, lo: int, hi: int) -> ArrayLike:
        """Truncated sum_{l=lo}^{hi} Psi(2^l x)"""
        x = np.asarray(x, dtype=float)
        return sum(np.asarray(self.psi_level(level, x)) for level in range(lo, hi + 1))


CUTOFFS = CutoffPair()


@dataclass
class KernelReport:
    """Largest observed ratios |d^i K| |x-y|^{mu+i} / E and the verdict"""
    samples: int
    size_ratio: float
    dy_ratios: Dict[int, float]
    dx_ratios: Dict[int, float] = field(default_factory=dict)
    include_ac: bool = False
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_rows(self) -> List[dict]:
        rows = [{'condition': 'size', 'order': 0, 'max_ratio': self.size_ratio}]
        rows += [{'condition': 'dy', 'order': i, 'max_ratio': r} for i, r in sorted(self.dy_ratios.items())]
        rows += [{'condition': 'dx', 'order': i, 'max_ratio': r} for i, r in sorted(self.dx_ratios.items())]
        for row in rows:
            row['pass'] = row['max_ratio'] <= 1.0 + KERNEL['ratio_slack']
        return rows


def _power_derivatives(kernel: SingularKernel, distance: np.ndarray) -> Dict[int, np.ndarray]:
    """|d^i |x-y|^{-mu}| for i = 1, 2, identical in x and y"""
    mu = kernel.mu
    return {
        1: mu * distance ** (-mu - 1),
        2: mu * (mu + 1) * distance ** (-mu - 2)
    }


def _fd_derivatives(kernel: SingularKernel, x: np.ndarray, y: np.ndarray,
                    axis: str, distance: np.ndarray) -> Dict[int, np.ndarray]:
    """Fourth-order central differences with a step scaled to |x - y|"""
    h = np.minimum(KERNEL['fd_relative_step'] * distance, KERNEL['fd_max_step'])

    def shifted(offset):
        if axis == 'y':
            return kernel.evaluate(x, y + offset * h)
        return kernel.evaluate(x + offset * h, y)

    f_m2, f_m1, f_0, f_p1, f_p2 = (shifted(s) for s in (-2, -1, 0, 1, 2))
    first = (f_m2 - 8 * f_m1 + 8 * f_p1 - f_p2) / (12 * h)
    second = (-f_m2 + 16 * f_m1 - 30 * f_0 + 16 * f_p1 - f_p2) / (12 * h * h)
    return {1: np.abs(first), 2: np.abs(second)}


def verify_kernel_conditions(kernel: SingularKernel, samples: int = None,
                             include_ac: bool = False, seed: int = 0) -> KernelReport:
    """
    Check |K| <= E|x-y|^{-mu} and |d_y^i K| <= E|x-y|^{-mu-i}, i = 1, 2

    Pairs are drawn with |x - y| log-uniform in [1e-6, 1]. Derivatives are
    exact for pure powers and finite differences for modulated kernels.

    Args:
        kernel: Kernel under test
        samples: Number of (x, y) pairs
        include_ac: Also check the x-derivative condition
        seed: Seed for the sample generator

    Returns:
        KernelReport with the largest ratios and any failures
    """
    samples = samples or KERNEL['samples']
    if samples < 1:
        raise ValueError("samples must be >= 1")

    rng = np.random.default_rng(seed)
    log_lo, log_hi = np.log(KERNEL['min_distance']), np.log(KERNEL['max_distance'])
    distance = np.exp(rng.uniform(log_lo, log_hi, samples))
    x = rng.uniform(-0.5, 0.5, samples)
    y = x + rng.choice([-1.0, 1.0], samples) * distance
    distance = np.abs(x - y)

    size = np.abs(kernel.evaluate(x, y)) * distance ** kernel.mu / kernel.E
    report = KernelReport(samples=samples, size_ratio=float(size.max()), dy_ratios={}, include_ac=include_ac)

    axes = ['y', 'x'] if include_ac else ['y']
    for axis in axes:
        if kernel.family == 'power':
            derivatives = _power_derivatives(kernel, distance)
        else:
            derivatives = _fd_derivatives(kernel, x, y, axis, distance)
        ratios = {
            order: float(np.max(values * distance ** (kernel.mu + order) / kernel.E))
            for order, values in derivatives.items()
        }
        if axis == 'y':
            report.dy_ratios = ratios
        else:
            report.dx_ratios = ratios

    for row in report.as_rows():
        if not row['pass']:
            report.failures.append(
                f"{row['condition']} order {row['order']}: ratio {row['max_ratio']:.4g} > 1"
            )
    if report.failures:
        logger.warning(f"Kernel {kernel.to_spec()} fails {len(report.failures)} condition(s)")
    return report
