"""
Discretized operators and operator-norm estimates
Builds kernel matrices on trapezoid grids and estimates L^p -> L^p norms:
power iteration for p = 2, a nonlinear power method for lower bounds at
general p and Schur-test upper bounds
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from .config import EXPERIMENTS, NORMS, OPERATOR
from .errors import NonConvergence, ResolutionInadequate
from .operator import (
    OperatorConfig, SampledFunction, Variant, integrand_spec, kernel_weight
)
from .quad import integrate

logger = logging.getLogger(__name__)


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    gaps = np.diff(nodes)
    weights = np.zeros(len(nodes))
    weights[:-1] += gaps / 2
    weights[1:] += gaps / 2
    return weights


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Sample points and positive quadrature weights in x and y, plus the exponent p"""
    x_nodes: np.ndarray
    y_nodes: np.ndarray
    x_weights: np.ndarray
    y_weights: np.ndarray
    p: float = 2.0

    def __post_init__(self):
        box_lo, box_hi = OPERATOR['box']
        for name in ('x_nodes', 'y_nodes', 'x_weights', 'y_weights'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for nodes, weights, axis in ((self.x_nodes, self.x_weights, 'x'), (self.y_nodes, self.y_weights, 'y')):
            if nodes.ndim != 1 or nodes.shape != weights.shape:
                raise ValueError(f"{axis}-nodes and weights must be 1-d with equal length")
            if len(nodes) > 1 and np.any(np.diff(nodes) <= 0):
                raise ValueError(f"{axis}-nodes must be strictly increasing")
            if np.any(weights <= 0):
                raise ValueError(f"{axis}-weights must be positive")
            if nodes.min() < box_lo or nodes.max() > box_hi:
                raise ValueError(f"{axis}-nodes leave the amplitude box [{box_lo}, {box_hi}]")
        if not (self.p >= 1 or self.p == math.inf):
            raise ValueError(f"p must be >= 1, got {self.p}")

    @classmethod
    def uniform(cls, size: int, radius: float = 0.5, p: float = 2.0) -> 'GridSpec':
        """
        size interior nodes of a uniform mesh on [-radius, radius] with trapezoid
        weights (the endpoints carry psi = 0 and are left out)
        """
        if size < 2:
            raise ValueError("Grid size must be >= 2")
        mesh = np.linspace(-radius, radius, size + 2)
        nodes = mesh[1:-1]
        weights = trapezoid_weights(mesh)[1:-1]
        return cls(nodes, nodes.copy(), weights, weights.copy(), p)

    @property
    def shape(self):
        return len(self.x_nodes), len(self.y_nodes)

    def transposed(self) -> 'GridSpec':
        return GridSpec(self.y_nodes, self.x_nodes, self.y_weights, self.x_weights, self.p)


@dataclass(frozen=True, eq=False)
class DiscretizedOperator:
    """(A f)(x_m) ~ sum_n matrix[m, n] * y_weights[n] * f(y_n)"""
    matrix: np.ndarray
    grids: GridSpec
    variant: str = 'T'
    error_budget: float = 0.0

    def __post_init__(self):
        if self.matrix.shape != self.grids.shape:
            raise ValueError(f"Matrix shape {self.matrix.shape} does not match grid {self.grids.shape}")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("Discretized operator has non-finite entries")

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix) or not np.any(self.matrix.imag)

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.matrix @ (self.grids.y_weights * f)

    def apply_adjoint(self, g: np.ndarray) -> np.ndarray:
        """Adjoint for the weighted pairings: sum_m conj(matrix[m, n]) x_weights[m] g_m"""
        return self.matrix.conj().T @ (self.grids.x_weights * g)

    def adjoint(self) -> 'DiscretizedOperator':
        return DiscretizedOperator(
            matrix=self.matrix.conj().T.copy(),
            grids=self.grids.transposed(),
            variant=f"{self.variant}*",
            error_budget=self.error_budget
        )

    def similarity(self) -> np.ndarray:
        """W_x^{1/2} A W_y^{1/2}, whose 2-norm is the discretized L^2 operator norm"""
        return np.sqrt(self.grids.x_weights)[:, None] * self.matrix * np.sqrt(self.grids.y_weights)[None, :]


@dataclass
class NormEstimate:
    value: float
    converged: bool
    iterations: int
    vector: Optional[np.ndarray] = field(default=None, repr=False)


def _assemble_rows(cfg: OperatorConfig, variant: Variant, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    X, Y = xs[:, None], ys[None, :]
    oscillation = np.exp(1j * cfg.lam * np.asarray(cfg.phase.evaluate(X, Y)))
    return oscillation * kernel_weight(cfg, variant, X, Y)


def discretize(cfg: OperatorConfig, variant, grid: GridSpec, threads: int = 1) -> DiscretizedOperator:
    """
    Kernel matrix of a variant on a grid

    Entries coinciding with the diagonal x = y are left out for T and T1; the
    mass of the omitted cell, E * 2 (w/2)^{1-mu} / (1-mu), is recorded as the
    error budget.

    Args:
        cfg: Operator configuration
        variant: Variant or its string form
        grid: Sample grid
        threads: Row chunks assembled in parallel

    Returns:
        DiscretizedOperator
    """
    variant = Variant.parse(variant) if isinstance(variant, str) else variant
    chunk = NORMS['row_chunk']
    starts = list(range(0, len(grid.x_nodes), chunk))

    def rows(start):
        return _assemble_rows(cfg, variant, grid.x_nodes[start:start + chunk], grid.y_nodes)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(rows, starts))
    else:
        blocks = [rows(start) for start in starts]
    matrix = np.vstack(blocks)

    budget = 0.0
    if variant.has_diagonal:
        hits = np.isin(grid.y_nodes, grid.x_nodes)
        if np.any(hits):
            mu = cfg.kernel.mu
            widths = grid.y_weights[hits]
            budget = float(np.max(cfg.kernel.E * 2.0 * (widths / 2) ** (1 - mu) / (1 - mu)))
    return DiscretizedOperator(matrix=matrix, grids=grid, variant=str(variant), error_budget=budget)


def grid_for_lambda(cfg: OperatorConfig, base_size: int = None, points_per_wavelength: float = None,
                    max_size: int = None, p: float = 2.0) -> GridSpec:
    """Uniform grid fine enough for the oscillation lam * max|d_y S| on the amplitude support"""
    base_size = base_size or NORMS['grid_size']
    points_per_wavelength = points_per_wavelength or NORMS['points_per_wavelength']
    max_size = max_size or NORMS['max_grid_size']

    radius = cfg.support_radius
    samples = np.linspace(-radius, radius, OPERATOR['osc_samples'])
    X, Y = np.meshgrid(samples, samples, indexing='ij')
    frequency = cfg.lam * float(np.max(np.abs(cfg.phase.partial(0, 1, X, Y))))
    wavelengths = 2 * radius * frequency / (2 * math.pi)
    size = max(base_size, int(math.ceil(wavelengths * points_per_wavelength)))
    if size > max_size:
        logger.warning(f"Grid for lambda={cfg.lam:g} capped at {max_size} points (wanted {size})")
        size = max_size
    return GridSpec.uniform(size, radius=OPERATOR['box'][1], p=p)


def lp_norm(values, weights, p: float) -> float:
    """(sum w_i |v_i|^p)^{1/p}, or max |v_i| for p = inf"""
    values = np.abs(np.asarray(values))
    weights = np.asarray(weights, dtype=float)
    if p == math.inf:
        return float(values.max()) if values.size else 0.0
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(np.sum(weights * values ** p) ** (1.0 / p))


def opnorm2(A: DiscretizedOperator, tol: float = None, maxiter: int = None, seed: int = 0,
            strict: bool = False) -> NormEstimate:
    """
    Discretized L^2 -> L^2 norm by power iteration on B* B, B = W_x^{1/2} A W_y^{1/2}

    Stops when ||B* B v - s^2 v|| <= tol * s^2. Without convergence the best
    estimate is returned with converged=False (or NonConvergence is raised
    when strict).

    Returns:
        NormEstimate whose vector is the top right singular vector in f-coordinates
    """
    tol = tol or NORMS['power_tol']
    maxiter = maxiter or NORMS['power_maxiter']
    B = A.similarity()
    rng = np.random.default_rng(seed)
    if A.is_real:
        B = B.real
        v = rng.standard_normal(B.shape[1])
    else:
        v = rng.standard_normal(B.shape[1]) + 1j * rng.standard_normal(B.shape[1])
    v /= np.linalg.norm(v)

    sigma2 = 0.0
    converged = False
    iterations = 0
    for iterations in range(1, maxiter + 1):
        w = B.conj().T @ (B @ v)
        sigma2 = float(np.vdot(v, w).real)
        norm_w = np.linalg.norm(w)
        if norm_w == 0:
            sigma2, converged = 0.0, True
            break
        if np.linalg.norm(w - sigma2 * v) <= tol * sigma2:
            converged = True
            break
        v = w / norm_w

    estimate = NormEstimate(
        value=math.sqrt(max(sigma2, 0.0)),
        converged=converged,
        iterations=iterations,
        vector=v / np.sqrt(A.grids.y_weights)
    )
    if not converged:
        message = f"Power iteration for {A.variant} stopped after {iterations} iterations"
        if strict:
            raise NonConvergence(message, estimate)
        logger.warning(message)
    return estimate


def _duality_map(v: np.ndarray, weights: np.ndarray, p: float) -> np.ndarray:
    """J_p(v) = |v|^{p-1} sgn(v) / ||v||_p^{p-1}, so <J_p v, v> = ||v||_p and ||J_p v||_{p'} = 1"""
    magnitude = np.abs(v)
    norm = lp_norm(v, weights, p)
    if norm == 0:
        return np.zeros_like(v)
    sign = np.where(magnitude > 0, v / np.where(magnitude > 0, magnitude, 1.0), 0.0)
    return sign * (magnitude / norm) ** (p - 1)


def scaled_bumps(nodes: np.ndarray, levels: int = 9) -> List[SampledFunction]:
    """
    Bumps centred at +-2^{-s}, s = 1..levels, of width 2^{-s-1} but never
    narrower than two grid spacings, so each one is seen by the grid
    """
    spacing = float(np.min(np.diff(nodes))) if len(nodes) > 1 else 0.0
    functions = []
    for s in range(1, levels + 1):
        center = 2.0 ** -s
        width = max(center / 2, 2 * spacing)
        functions += [SampledFunction.bump(center, width), SampledFunction.bump(-center, width)]
    return functions


def designed_starts(nodes: np.ndarray) -> List[np.ndarray]:
    """The indicator of [1/8, 1/4] and the scaled bumps"""
    functions = [SampledFunction.indicator(0.125, 0.25)] + scaled_bumps(nodes)
    starts = [f(nodes) for f in functions]
    return [v for v in starts if np.any(v)]


def opnorm_p_lower(A: DiscretizedOperator, p: float, restarts: int = None, seed: int = 0,
                   starts: Sequence[np.ndarray] = None, tol: float = None,
                   maxiter: int = None) -> NormEstimate:
    """
    Lower bound on the discretized L^p -> L^p norm

    Nonlinear power method: f <- J_{p'}(A* J_p(A f)), normalized in L^p.
    Every iterate certifies ||A f||_p / ||f||_p; the best over random starts,
    designed starts and the top 2-norm singular vector is returned. Real
    matrices are explored with real starts.

    Args:
        A: Discretized operator
        p: Exponent, 1 < p < inf
        restarts: Number of random starts
        seed: Seed for the random starts
        starts: Designed starts on the y-grid (default: designed_starts)
        tol: Relative stopping tolerance of each run
        maxiter: Iteration cap of each run

    Returns:
        NormEstimate with the maximizing f
    """
    if not 1 < p < math.inf:
        raise ValueError(f"opnorm_p_lower needs 1 < p < inf, got {p}")
    restarts = NORMS['p_restarts'] if restarts is None else restarts
    tol = tol or NORMS['p_tol']
    maxiter = maxiter or NORMS['p_maxiter']
    q = p / (p - 1)
    wx, wy = A.grids.x_weights, A.grids.y_weights
    real = A.is_real
    rng = np.random.default_rng(seed)

    candidates = list(designed_starts(A.grids.y_nodes) if starts is None else starts)
    top = opnorm2(A, seed=seed)
    candidates.append(np.real(top.vector) if real else top.vector)
    for _ in range(restarts):
        v = rng.standard_normal(len(wy))
        if not real:
            v = v + 1j * rng.standard_normal(len(wy))
        candidates.append(v)

    best = NormEstimate(value=0.0, converged=True, iterations=0, vector=None)
    for start in candidates:
        f = np.asarray(np.real(start), dtype=float) if real else np.asarray(start, dtype=complex)
        norm = lp_norm(f, wy, p)
        if norm == 0:
            continue
        f = f / norm
        gamma = lp_norm(A.apply(f), wx, p)
        converged = False
        iterations = 0
        for iterations in range(1, maxiter + 1):
            z = A.apply_adjoint(_duality_map(A.apply(f), wx, p))
            if not np.any(z):
                converged = True
                break
            f = _duality_map(z, wy, q)
            f = f / lp_norm(f, wy, p)
            updated = lp_norm(A.apply(f), wx, p)
            if updated <= gamma * (1 + tol):
                gamma = max(gamma, updated)
                converged = True
                break
            gamma = updated
        if gamma > best.value:
            best = NormEstimate(value=gamma, converged=converged, iterations=iterations, vector=f)
    return best


def matrix_schur_bound(A: DiscretizedOperator, p: float) -> float:
    """Discrete Schur test: ||A||_p <= R^{1/p'} C^{1/p} with weighted row/column sums"""
    magnitude = np.abs(A.matrix)
    rows = float(np.max(magnitude @ A.grids.y_weights))
    cols = float(np.max(A.grids.x_weights @ magnitude))
    return SchurBounds(rows, cols).p_bound(p)


@dataclass
class SchurBounds:
    """A1 = sup_x integral |Ker| dy (rows), A2 = sup_y integral |Ker| dx (columns)"""
    A1: float
    A2: float
    x_star: float = 0.0
    y_star: float = 0.0

    def p_bound(self, p: float) -> float:
        """Schur test bound A1^{1/p'} A2^{1/p}"""
        if p == math.inf:
            return self.A1
        return self.A1 ** (1 - 1 / p) * self.A2 ** (1 / p)

    def linear_bound(self, p: float) -> float:
        """A1/p' + A2/p, the arithmetic-mean form of p_bound"""
        if p == math.inf:
            return self.A1
        return self.A1 * (1 - 1 / p) + self.A2 / p


def _absolute_integral(cfg: OperatorConfig, variant: Variant, point: float, axis: str) -> float:
    radius = cfg.support_radius
    spec = integrand_spec(cfg, variant, SampledFunction.indicator(-radius, radius), point, axis)
    if spec is None:
        return 0.0
    inner = spec.amplitude
    absolute = replace(spec, amplitude=lambda t: np.abs(inner(t)), phase_fn=lambda t: np.zeros_like(t),
                       osc_scale=0.0)
    return abs(integrate(absolute, tol=cfg.quad_tol, max_panels=cfg.max_panels).value)


def _sup_sample(func: Callable[[float], float], radius: float, samples: int, refine: int):
    points = np.linspace(-radius, radius, samples + 2)[1:-1]
    values = np.array([func(t) for t in points])
    i = int(np.argmax(values))
    lo = points[max(i - 1, 0)]
    hi = points[min(i + 1, len(points) - 1)]
    local = np.linspace(lo, hi, refine)
    local_values = np.array([func(t) for t in local])
    if local_values.max() > values[i]:
        i_local = int(np.argmax(local_values))
        return float(local_values[i_local]), float(local[i_local])
    return float(values[i]), float(points[i])


def schur_bounds(cfg: OperatorConfig, variant, lam: float = None) -> SchurBounds:
    """
    Schur-test constants by quadrature of |Ker|

    Rows and columns are sampled at 64 points of the amplitude support and
    refined around the maximizer.
    """
    variant = Variant.parse(variant) if isinstance(variant, str) else variant
    if lam is not None:
        cfg = cfg.with_lambda(lam)
    radius = cfg.support_radius
    A1, x_star = _sup_sample(lambda x: _absolute_integral(cfg, variant, x, 'y'), radius,
                             NORMS['schur_samples'], NORMS['schur_refine'])
    A2, y_star = _sup_sample(lambda y: _absolute_integral(cfg, variant, y, 'x'), radius,
                             NORMS['schur_samples'], NORMS['schur_refine'])
    return SchurBounds(A1=A1, A2=A2, x_star=x_star, y_star=y_star)


def check_resolution(cfg: OperatorConfig, variant, size: int, tol: float = None,
                     threads: int = 1) -> dict:
    """
    Compare opnorm2 on grids of size N and 2N (or N/2 and N when 2N exceeds
    the check cap)

    Raises:
        ResolutionInadequate: relative change above tol
    """
    tol = tol or EXPERIMENTS['resolution_tol']
    if 2 * size <= NORMS['max_check_size']:
        coarse, fine = size, 2 * size
    else:
        coarse, fine = size // 2, size
    radius = OPERATOR['box'][1]
    norms = {}
    for n in (coarse, fine):
        A = discretize(cfg, variant, GridSpec.uniform(n, radius=radius), threads=threads)
        norms[n] = opnorm2(A).value
    change = abs(norms[fine] - norms[coarse]) / max(norms[fine], 1e-300)
    diagnostics = {
        'lambda': cfg.lam, 'variant': str(variant), 'coarse_size': coarse, 'fine_size': fine,
        'coarse_norm': norms[coarse], 'fine_norm': norms[fine], 'relative_change': change
    }
    if norms[fine] > 0 and change > tol:
        raise ResolutionInadequate(
            f"opnorm2 changed by {100 * change:.2f}% between {coarse} and {fine} points at lambda={cfg.lam:g}",
            diagnostics
        )
    return diagnostics


def weak_l1_quasinorm(values, weights) -> float:
    """sup_t t * |{|v| > t}| on a weighted grid"""
    magnitude = np.abs(np.asarray(values))
    order = np.argsort(magnitude)[::-1]
    cumulative = np.cumsum(np.asarray(weights, dtype=float)[order])
    return float(np.max(magnitude[order] * cumulative)) if magnitude.size else 0.0
