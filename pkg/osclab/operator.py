"""
Oscillatory integral operators and their decompositions
Tf(x) = integral e^{i lam S(x,y)} K(x,y) psi(x,y) f(y) dy, its near/far split
T = T1 + T2, the dyadic pieces of T2, the X/Delta/Y groups and the damped
families carrying |S''_xy|^z
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import OPERATOR, QUAD
from .errors import DampingSingularity
from .phase import (
    DyadicIndex, HessianFactorization, HomogeneousPhase, Region,
    compute_K_threshold, factor_hessian
)
from .quad import IntegrandSpec, QuadResult, integrate
from .weights import CUTOFFS, CutoffPair, SingularKernel

logger = logging.getLogger(__name__)

FUNCTION_KINDS = ('indicator', 'bump', 'exponential', 'zero', 'samples')
VARIANT_KINDS = ('T', 'T1', 'T2', 'piece', 'group', 'damped')


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """
    Test function f: an analytic form (indicator, bump, complex exponential,
    zero) or samples on a strictly increasing grid, linearly interpolated and
    zero outside the grid
    """
    kind: str
    lo: float = -0.5
    hi: float = 0.5
    frequency: float = 0.0
    grid: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in FUNCTION_KINDS:
            raise ValueError(f"Unknown function kind '{self.kind}'")
        if self.kind == 'samples':
            grid = np.asarray(self.grid, dtype=float)
            values = np.asarray(self.values, dtype=complex)
            if grid.ndim != 1 or grid.shape != values.shape:
                raise ValueError("Sample grid and values must be 1-d arrays of the same length")
            if len(grid) < 2 or np.any(np.diff(grid) <= 0):
                raise ValueError("Sample grid must be strictly increasing with at least 2 points")
            object.__setattr__(self, 'grid', grid)
            object.__setattr__(self, 'values', values)
        elif self.kind != 'zero' and not self.lo < self.hi:
            raise ValueError(f"Support [{self.lo}, {self.hi}] is empty")

    @classmethod
    def indicator(cls, lo: float, hi: float) -> 'SampledFunction':
        return cls('indicator', lo=lo, hi=hi)

    @classmethod
    def bump(cls, center: float, width: float) -> 'SampledFunction':
        """phi((y - center) / width), supported in [center - width, center + width]"""
        if width <= 0:
            raise ValueError("Bump width must be positive")
        return cls('bump', lo=center - width, hi=center + width)

    @classmethod
    def exponential(cls, frequency: float, lo: float = -0.5, hi: float = 0.5) -> 'SampledFunction':
        return cls('exponential', lo=lo, hi=hi, frequency=frequency)

    @classmethod
    def zero(cls) -> 'SampledFunction':
        return cls('zero')

    @classmethod
    def from_samples(cls, grid: Sequence[float], values: Sequence[complex]) -> 'SampledFunction':
        return cls('samples', grid=grid, values=values)

    @property
    def support(self) -> Optional[Tuple[float, float]]:
        if self.kind == 'zero':
            return None
        if self.kind == 'samples':
            return float(self.grid[0]), float(self.grid[-1])
        return self.lo, self.hi

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        if self.kind == 'zero':
            return ()
        if self.kind == 'samples':
            return tuple(self.grid)
        if self.kind == 'bump':
            center, width = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)
            return (self.lo, center - width / 2, center + width / 2, self.hi)
        return (self.lo, self.hi)

    @property
    def sup_norm(self) -> float:
        if self.kind == 'zero':
            return 0.0
        if self.kind == 'samples':
            return float(np.abs(self.values).max())
        return 1.0

    @property
    def is_real(self) -> bool:
        if self.kind == 'exponential':
            return self.frequency == 0
        if self.kind == 'samples':
            return not np.any(self.values.imag)
        return True

    def __call__(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.kind == 'zero':
            return np.zeros(y.shape, dtype=complex)
        if self.kind == 'samples':
            real = np.interp(y, self.grid, self.values.real, left=0.0, right=0.0)
            imag = np.interp(y, self.grid, self.values.imag, left=0.0, right=0.0)
            return real + 1j * imag
        inside = (y >= self.lo) & (y <= self.hi)
        if self.kind == 'indicator':
            return inside.astype(complex)
        if self.kind == 'exponential':
            return np.where(inside, np.exp(1j * self.frequency * y), 0.0)
        center, width = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)
        return np.asarray(CUTOFFS.phi((y - center) / width), dtype=complex)

    def to_spec(self) -> dict:
        if self.kind == 'zero':
            return {'kind': 'zero'}
        if self.kind == 'samples':
            return {'kind': 'samples', 'size': len(self.grid)}
        spec = {'kind': self.kind, 'interval': [self.lo, self.hi]}
        if self.kind == 'exponential':
            spec['frequency'] = self.frequency
        return spec


@dataclass(frozen=True)
class OperatorConfig:
    """
    Operator parameters; psi(x, y) = phi(s x) phi(s y) with s = amplitude_scale,
    so psi is supported in [-1/s, 1/s]^2 and equal to 1 on [-1/(2s), 1/(2s)]^2
    """
    phase: HomogeneousPhase
    kernel: SingularKernel
    lam: float
    quad_tol: float = QUAD['tol']
    max_panels: int = QUAD['max_panels']
    J_max: int = OPERATOR['J_max']
    quadrants: Tuple[Tuple[int, int], ...] = OPERATOR['quadrants']
    amplitude_scale: float = OPERATOR['amplitude_scale']
    cutoffs: CutoffPair = field(default=CUTOFFS, compare=False)

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.quad_tol > 0:
            raise ValueError("quad_tol must be positive")
        if self.max_panels < 1:
            raise ValueError("max_panels must be >= 1")
        if self.J_max < 1:
            raise ValueError("J_max must be >= 1")
        box_lo, box_hi = OPERATOR['box']
        if 1.0 / self.amplitude_scale > min(-box_lo, box_hi):
            raise ValueError("Amplitude support must lie inside the box [-1/2, 1/2]^2")
        quadrants = tuple(tuple(int(s) for s in q) for q in self.quadrants)
        if not quadrants or any(len(q) != 2 or set(q) - {1, -1} for q in quadrants):
            raise ValueError("quadrants must be a non-empty subset of {(+-1, +-1)}")
        object.__setattr__(self, 'quadrants', quadrants)

    @property
    def degree(self) -> int:
        return self.phase.degree

    @property
    def delta(self) -> float:
        """Width lam^{-1/n} of the near-diagonal cutoff"""
        return self.lam ** (-1.0 / self.degree)

    @property
    def support_radius(self) -> float:
        return 1.0 / self.amplitude_scale

    @cached_property
    def factorization(self) -> HessianFactorization:
        return factor_hessian(self.phase)

    @cached_property
    def threshold(self) -> int:
        return compute_K_threshold(self.factorization)

    def amplitude(self, x, y) -> np.ndarray:
        s = self.amplitude_scale
        return np.asarray(self.cutoffs.phi(s * np.asarray(x, dtype=float))) * \
            np.asarray(self.cutoffs.phi(s * np.asarray(y, dtype=float)))

    def with_lambda(self, lam: float) -> 'OperatorConfig':
        return replace(self, lam=lam)

    def negated(self) -> 'OperatorConfig':
        """Same operator with lam replaced by -lam"""
        return replace(self, phase=self.phase.negated())


@dataclass(frozen=True)
class Variant:
    """Which operator kernel to use: T, T1, T2, one piece, one group or a damped group"""
    kind: str = 'T'
    region: Optional[Region] = None
    index: Optional[DyadicIndex] = None
    z: complex = 0j

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ValueError(f"Unknown variant '{self.kind}', choose from {VARIANT_KINDS}")
        if self.kind in ('group', 'damped') and self.region is None:
            raise ValueError(f"Variant '{self.kind}' needs a region")
        if self.kind == 'damped' and self.region == Region.DELTA:
            raise ValueError("Only the X and Y groups carry a damping factor")
        if self.kind == 'piece' and self.index is None:
            raise ValueError("Variant 'piece' needs a dyadic index")
        object.__setattr__(self, 'z', complex(self.z))

    @classmethod
    def parse(cls, text: str) -> 'Variant':
        """Parse 'T', 'T1', 'T2', 'group:Y', 'damped:Y:0.5+1j' or 'piece:j,k,sx,sy'"""
        parts = [p.strip() for p in str(text).split(':')]
        kind = parts[0]
        if kind in ('T', 'T1', 'T2') and len(parts) == 1:
            return cls(kind)
        if kind == 'group' and len(parts) == 2:
            return cls('group', region=Region.parse(parts[1]))
        if kind == 'damped' and len(parts) == 3:
            return cls('damped', region=Region.parse(parts[1]), z=complex(parts[2].replace(' ', '')))
        if kind == 'piece' and len(parts) == 2:
            numbers = [int(v) for v in parts[1].split(',')]
            if len(numbers) == 2:
                numbers += [1, 1]
            if len(numbers) != 4:
                raise ValueError(f"Piece variant needs j,k[,sx,sy], got '{parts[1]}'")
            return cls('piece', index=DyadicIndex(*numbers))
        raise ValueError(f"Cannot parse variant '{text}'")

    @property
    def has_diagonal(self) -> bool:
        """T and T1 keep the kernel singularity on x = y"""
        return self.kind in ('T', 'T1')

    def __str__(self) -> str:
        if self.kind == 'group':
            return f"group:{self.region.value}"
        if self.kind == 'damped':
            return f"damped:{self.region.value}:{self.z.real:g}{self.z.imag:+g}j"
        if self.kind == 'piece':
            i = self.index
            return f"piece:{i.j},{i.k},{i.sigma_x},{i.sigma_y}"
        return self.kind


@dataclass(frozen=True)
class DampedConfig:
    base: OperatorConfig
    z: complex
    region: Region

    def __post_init__(self):
        object.__setattr__(self, 'region', Region.parse(self.region))
        if self.region == Region.DELTA:
            raise ValueError("Damped families exist only for regions X and Y")

    @property
    def variant(self) -> Variant:
        return Variant('damped', region=self.region, z=self.z)


def _quadrant_mask(cfg: OperatorConfig, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    mask = np.zeros(x.shape, dtype=bool)
    for sx, sy in cfg.quadrants:
        mask |= (sx * x > 0) & (sy * y > 0)
    return mask


def _region_codes(j: np.ndarray, k: np.ndarray, threshold: int) -> np.ndarray:
    """Vectorized classify(): 1 for Y, -1 for X, 0 for Delta"""
    return np.where(j > k + threshold, 1, np.where(j < k - threshold, -1, 0))


_REGION_CODE = {Region.Y: 1, Region.X: -1, Region.DELTA: 0}


def group_weight(cfg: OperatorConfig, region: Region, x, y) -> np.ndarray:
    """
    Sum of Psi(2^j |x|) Psi(2^k |y|) over 0 <= j, k <= J_max with
    classify(j, k) == region, restricted to the configured quadrants
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    ax, ay = np.abs(x), np.abs(y)
    valid = _quadrant_mask(cfg, x, y) & (ax > 0) & (ay > 0)
    safe_x = np.where(ax > 0, ax, 1.0)
    safe_y = np.where(ay > 0, ay, 1.0)
    base_j = np.floor(-np.log2(safe_x)).astype(int)
    base_k = np.floor(-np.log2(safe_y)).astype(int)
    code = _REGION_CODE[Region.parse(region)]

    x_terms = []
    for shift in (-1, 0, 1):
        j = base_j + shift
        x_terms.append((j, np.asarray(cfg.cutoffs.psi(np.ldexp(safe_x, j))), (j >= 0) & (j <= cfg.J_max)))
    total = np.zeros(x.shape)
    for shift in (-1, 0, 1):
        k = base_k + shift
        psi_y = np.asarray(cfg.cutoffs.psi(np.ldexp(safe_y, k)))
        k_ok = (k >= 0) & (k <= cfg.J_max)
        for j, psi_x, j_ok in x_terms:
            keep = j_ok & k_ok & (_region_codes(j, k, cfg.threshold) == code)
            total += np.where(keep, psi_x * psi_y, 0.0)
    return np.where(valid, total, 0.0)


def piece_weight(cfg: OperatorConfig, index: DyadicIndex, x, y) -> np.ndarray:
    """Psi(2^j |x|) Psi(2^k |y|) on the quadrant (sigma_x, sigma_y)"""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    inside = (index.sigma_x * x > 0) & (index.sigma_y * y > 0)
    values = np.asarray(cfg.cutoffs.psi_level(index.j, np.abs(x))) * \
        np.asarray(cfg.cutoffs.psi_level(index.k, np.abs(y)))
    return np.where(inside, values, 0.0)


def truncation_weight(cfg: OperatorConfig, x, y) -> np.ndarray:
    """Share of the T2 integrand covered by the truncated pieces in the configured quadrants"""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    level = 2.0 ** cfg.J_max
    covered = (1.0 - np.asarray(cfg.cutoffs.phi(level * x))) * (1.0 - np.asarray(cfg.cutoffs.phi(level * y)))
    return np.where(_quadrant_mask(cfg, x, y), covered, 0.0)


def damping_factor(phase: HomogeneousPhase, z: complex, x, y):
    """
    |S''_xy(x, y)|^z = |S''|^{Re z} exp(i Im z ln|S''|)

    On the zero variety the factor is 0 for Re z > 0 and for purely imaginary
    z (the point is skipped); z = 0 gives 1 everywhere. For Re z < 0 a point
    on the variety is moved by one ulp in y, and DampingSingularity is raised
    if that does not leave the variety.
    """
    z = complex(z)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    if z == 0:
        values = np.ones(shape, dtype=complex)
        return complex(values) if not shape else values

    x, y = x.ravel(), y.ravel()
    h = np.abs(np.atleast_1d(np.asarray(phase.hessian(x, y), dtype=float)))
    zero = h == 0
    if z.real < 0 and np.any(zero):
        nudged = np.nextafter(y[zero], np.inf)
        h[zero] = np.abs(np.atleast_1d(np.asarray(phase.hessian(x[zero], nudged), dtype=float)))
        logger.warning(f"Damping factor: {int(zero.sum())} node(s) on S''_xy = 0 moved by one ulp")
        zero = h == 0
        if np.any(zero):
            raise DampingSingularity(
                f"|S''_xy|^z with Re(z) = {z.real:g} < 0 evaluated on the zero variety"
            )
    safe = np.where(zero, 1.0, h)
    values = np.where(zero, 0.0, np.exp(z * np.log(safe))).reshape(shape)
    return complex(values) if not shape else values


def kernel_weight(cfg: OperatorConfig, variant: Variant, x, y) -> np.ndarray:
    """
    Non-oscillatory part psi(x, y) K(x, y) [variant cutoffs] of the variant
    kernel; the diagonal x = y is set to 0 for T and T1
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    weight = cfg.amplitude(x, y) * cfg.kernel.evaluate(x, y, diagonal=0.0)
    if variant.kind == 'T':
        return weight
    near = np.asarray(cfg.cutoffs.phi((x - y) / cfg.delta))
    if variant.kind == 'T1':
        return weight * near
    weight = weight * (1.0 - near)
    if variant.kind == 'piece':
        weight = weight * piece_weight(cfg, variant.index, x, y)
    elif variant.kind in ('group', 'damped'):
        weight = weight * group_weight(cfg, variant.region, x, y)
    if variant.kind != 'damped':
        return weight

    live = weight != 0
    damped = np.zeros(weight.shape, dtype=complex)
    if np.any(live):
        damped[live] = weight[live] * damping_factor(cfg.phase, variant.z, x[live], y[live])
    return damped


def _variant_window(cfg: OperatorConfig, variant: Variant, axis: str, point: float) -> Tuple[float, float]:
    """Interval of the integration variable where the variant kernel can be nonzero"""
    r = cfg.support_radius
    lo, hi = -r, r
    if variant.kind == 'T1':
        lo, hi = max(lo, point - cfg.delta), min(hi, point + cfg.delta)
    if variant.kind == 'piece':
        idx = variant.index
        level, sign = (idx.k, idx.sigma_y) if axis == 'y' else (idx.j, idx.sigma_x)
        band = sorted((sign * 2.0 ** (-level - 1), sign * 2.0 ** (-level + 1)))
        lo, hi = max(lo, band[0]), min(hi, band[1])
    return lo, hi


def _variant_breakpoints(cfg: OperatorConfig, variant: Variant, axis: str, point: float) -> List[float]:
    r = cfg.support_radius
    points = [-r, -r / 2, 0.0, r / 2, r]
    if variant.kind == 'T':
        return points
    d = cfg.delta
    points += [point - d, point - d / 2, point + d / 2, point + d]
    if variant.kind == 'piece':
        idx = variant.index
        level, sign = (idx.k, idx.sigma_y) if axis == 'y' else (idx.j, idx.sigma_x)
        points += [sign * 2.0 ** (-level + e) for e in (-1, 0, 1)]
    elif variant.kind in ('group', 'damped'):
        for level in range(0, cfg.J_max + 2):
            points += [2.0 ** -level, -2.0 ** -level]
    return points


def _damping_singularities(cfg: OperatorConfig, variant: Variant, axis: str,
                           point: float) -> List[Tuple[float, float]]:
    """(location, exponent) of the blow-ups of |S''|^z along y = alpha x when Re z < 0"""
    if variant.kind != 'damped' or variant.z.real >= 0:
        return []
    found = []
    for alpha, m in cfg.factorization.linear_factors:
        exponent = -m * variant.z.real
        if axis == 'y':
            found.append((alpha * point, exponent))
        elif alpha != 0:
            found.append((point / alpha, exponent))
    return found


def _osc_scale(cfg: OperatorConfig, axis: str, point: float, lo: float, hi: float) -> float:
    samples = np.linspace(lo, hi, OPERATOR['osc_samples'])
    if axis == 'y':
        derivative = cfg.phase.partial(0, 1, point, samples)
    else:
        derivative = cfg.phase.partial(1, 0, samples, point)
    return 1.1 * cfg.lam * float(np.max(np.abs(derivative)))


def integrand_spec(cfg: OperatorConfig, variant: Variant, f: SampledFunction,
                   point: float, axis: str = 'y') -> Optional[IntegrandSpec]:
    """
    The quadrature problem for (variant f)(point) when axis = 'y', or for the
    adjoint (variant* f)(point) when axis = 'x'; None if the integrand vanishes
    """
    support = f.support
    r = cfg.support_radius
    if support is None or abs(point) >= r:
        return None
    w_lo, w_hi = _variant_window(cfg, variant, axis, point)
    lo, hi = max(w_lo, support[0]), min(w_hi, support[1])
    if not lo < hi:
        return None

    if axis == 'y':
        def amplitude(t):
            return kernel_weight(cfg, variant, point, t) * f(t)

        def phase_fn(t):
            return cfg.lam * cfg.phase.evaluate(point, t)
    else:
        def amplitude(t):
            return np.conj(kernel_weight(cfg, variant, t, point)) * f(t)

        def phase_fn(t):
            return -cfg.lam * cfg.phase.evaluate(t, point)

    singular = {}
    if variant.has_diagonal:
        singular[point] = cfg.kernel.mu
    for location, exponent in _damping_singularities(cfg, variant, axis, point):
        singular[location] = singular.get(location, 0.0) + exponent
    singular = {s: e for s, e in singular.items() if lo <= s <= hi}
    for s, e in singular.items():
        if e >= 1:
            raise DampingSingularity(f"Integrand singularity of order {e:g} at {s:g} is not integrable")

    breakpoints = [b for b in _variant_breakpoints(cfg, variant, axis, point) + list(f.breakpoints) if lo < b < hi]
    ordered = sorted(singular)
    return IntegrandSpec(
        amplitude=amplitude,
        phase_fn=phase_fn,
        a=lo,
        b=hi,
        singular_points=tuple(ordered),
        singular_exponents=tuple(singular[s] for s in ordered),
        osc_scale=_osc_scale(cfg, axis, point, lo, hi),
        breakpoints=tuple(breakpoints),
        singular_bound=cfg.kernel.E * max(f.sup_norm, 1e-300)
    )


def _zero_result() -> QuadResult:
    return QuadResult(value=0j, abs_error_estimate=0.0, panels_used=0, converged=True)


def apply_variant(cfg: OperatorConfig, variant: Variant, f: SampledFunction, x: float,
                  strict: bool = True) -> QuadResult:
    """
    Evaluate (variant f)(x) by adaptive quadrature

    Args:
        cfg: Operator configuration
        variant: Kernel variant
        f: Test function
        x: Output point
        strict: Raise BudgetExceeded when the quadrature does not converge

    Returns:
        QuadResult with the value and its error estimate
    """
    spec = integrand_spec(cfg, variant, f, float(x), axis='y')
    if spec is None:
        return _zero_result()
    return integrate(spec, tol=cfg.quad_tol, max_panels=cfg.max_panels, strict=strict)


def apply_T(cfg: OperatorConfig, f: SampledFunction, x: float) -> complex:
    return apply_variant(cfg, Variant('T'), f, x).value


def apply_T1(cfg: OperatorConfig, f: SampledFunction, x: float) -> complex:
    """Near-diagonal part: inserts phi((x - y) lam^{1/n})"""
    return apply_variant(cfg, Variant('T1'), f, x).value


def apply_T2(cfg: OperatorConfig, f: SampledFunction, x: float) -> complex:
    """Far part: inserts 1 - phi((x - y) lam^{1/n})"""
    return apply_variant(cfg, Variant('T2'), f, x).value


def apply_piece(cfg: OperatorConfig, idx: DyadicIndex, f: SampledFunction, x: float) -> complex:
    if not (0 <= idx.j <= cfg.J_max and 0 <= idx.k <= cfg.J_max):
        raise ValueError(f"Dyadic index ({idx.j}, {idx.k}) outside the truncation 0..{cfg.J_max}")
    return apply_variant(cfg, Variant('piece', index=idx), f, x).value


def apply_group(cfg: OperatorConfig, region, f: SampledFunction, x: float) -> complex:
    return apply_variant(cfg, Variant('group', region=Region.parse(region)), f, x).value


def apply_damped(dcfg: DampedConfig, f: SampledFunction, x: float) -> complex:
    return apply_variant(dcfg.base, dcfg.variant, f, x).value


def adjoint_apply(cfg: OperatorConfig, g: SampledFunction, y: float,
                  variant: Variant = None, strict: bool = True) -> complex:
    """T*g(y) = integral e^{-i lam S(x,y)} conj(K(x,y)) psi(x,y) g(x) dx"""
    variant = variant or Variant('T')
    spec = integrand_spec(cfg, variant, g, float(y), axis='x')
    if spec is None:
        return 0j
    return integrate(spec, tol=cfg.quad_tol, max_panels=cfg.max_panels, strict=strict).value


def truncation_budget(cfg: OperatorConfig, f: SampledFunction, x: float) -> float:
    """
    Integral of |T2 integrand| over the part dropped by the dyadic truncation
    and the excluded quadrants, bounding |T2 f(x) - (T_X + T_Delta + T_Y) f(x)|
    """
    far = Variant('T2')
    spec = integrand_spec(cfg, far, f, float(x))
    if spec is None:
        return 0.0

    def dropped(t):
        return np.abs(kernel_weight(cfg, far, x, t) * f(t)) * (1.0 - truncation_weight(cfg, x, t))

    mass = IntegrandSpec(amplitude=dropped, a=spec.a, b=spec.b, breakpoints=spec.breakpoints)
    result = integrate(mass, tol=cfg.quad_tol, max_panels=cfg.max_panels)
    return abs(result.value) + result.abs_error_estimate


def apply_many(cfg: OperatorConfig, variant: Variant, f: SampledFunction,
               xs: Sequence[float], threads: int = 1, strict: bool = True) -> List[QuadResult]:
    """apply_variant at every x, optionally on a thread pool; results keep the order of xs"""
    def job(x):
        return apply_variant(cfg, variant, f, x, strict=strict)

    if threads <= 1:
        return [job(x) for x in xs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(job, xs))
