"""
Experiments for the Oscillatory Operator Laboratory
Lambda sweeps with decay-slope fits, damped and endpoint checks, the explicit
counterexample, decomposition audits and p-range bookkeeping. Every experiment
returns an ExperimentReport with CSV-ready rows, a summary line and a verdict.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from tqdm import tqdm

from .config import ACCEPTANCE, EXPERIMENTS
from .norms import (
    GridSpec, check_resolution, discretize, grid_for_lambda, lp_norm,
    matrix_schur_bound, opnorm2, opnorm_p_lower, scaled_bumps, schur_bounds, weak_l1_quasinorm
)
from .operator import (
    OperatorConfig, SampledFunction, Variant, apply_many, adjoint_apply,
    apply_variant, truncation_budget
)
from .phase import DyadicIndex, HomogeneousPhase, Region, hessian_box_range
from .weights import SingularKernel

logger = logging.getLogger(__name__)

PASS = 'pass'
FAIL = 'fail'
INCONCLUSIVE = 'inconclusive'
VERDICTS = (PASS, FAIL, INCONCLUSIVE)


@dataclass
class ExperimentReport:
    name: str
    verdict: str
    rows: List[dict]
    summary: str
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"Unknown verdict '{self.verdict}'")


@dataclass
class RangeReport:
    """Theorem range, necessary range and the gap between them"""
    n: int
    mu: float
    theorem_range: Tuple[float, float]
    necessary_range: Tuple[float, float]
    gap: List[Tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        (t_lo, t_hi), (n_lo, n_hi) = self.theorem_range, self.necessary_range
        if not (n_lo <= t_lo and t_hi <= n_hi):
            raise ValueError(f"Theorem range {self.theorem_range} not inside {self.necessary_range}")
        self.gap = [(a, b) for a, b in ((n_lo, t_lo), (t_hi, n_hi)) if b > a]

    @property
    def strict(self) -> bool:
        return bool(self.gap)

    def __str__(self) -> str:
        (t_lo, t_hi), (n_lo, n_hi) = self.theorem_range, self.necessary_range
        return f"[{t_lo:.3f}, {t_hi:.3f}] ⊂ [{n_lo:.3f}, {n_hi:.3f}]"


def p_ranges(n: int, mu: float) -> RangeReport:
    if n < 3 or not 0 < mu < 1:
        raise ValueError(f"p_ranges needs n >= 3 and 0 < mu < 1, got n={n}, mu={mu}")
    return RangeReport(
        n=n,
        mu=mu,
        theorem_range=((n - 2 * mu) / (n - 1 - mu), (n - 2 * mu) / (1 - mu)),
        necessary_range=(n / (n - 1 + mu), n / (1 - mu))
    )


def interpolation_exponents(n: int, mu: float) -> dict:
    """
    Interpolation between the damped L^2 bound (decay mu/n - 1/2) and the
    damped L^1 endpoint (no decay) with theta = 2(1-mu)/(n-2mu)
    """
    theta = 2 * (1 - mu) / (n - 2 * mu)
    inverse_p = theta / 2 + (1 - theta)
    return {
        'theta': theta,
        'p': 1.0 / inverse_p,
        'decay': theta * (mu / n - 0.5),
        'l2_decay': mu / n - 0.5,
        'endpoint_re_z': -(1 - mu) / (n - 2)
    }


def expected_slope(n: int, mu: float) -> float:
    return -(1 - mu) / n


@dataclass
class DecayFit:
    """Least-squares fit of log2(norm) against log2(lambda)"""
    lambdas: List[float]
    norms: List[float]
    slope: float
    intercept: float
    residual: float
    slope_stderr: float
    uppers: Optional[List[float]] = None
    upper_slope: Optional[float] = None

    def __str__(self) -> str:
        return f"slope={self.slope:.4f}±{self.slope_stderr:.4f}"


def _check_lambdas(lambdas: Sequence[float], minimum: int = None, geometric: bool = True) -> List[float]:
    minimum = EXPERIMENTS['min_lambdas'] if minimum is None else minimum
    lambdas = [float(lam) for lam in lambdas]
    if len(lambdas) < minimum:
        raise ValueError(f"A sweep needs at least {minimum} lambdas, got {len(lambdas)}")
    if any(lam <= 0 for lam in lambdas) or any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("Sweep lambdas must be positive and strictly increasing")
    if geometric:
        ratios = np.array(lambdas[1:]) / np.array(lambdas[:-1])
        if not np.allclose(ratios, ratios[0], rtol=1e-9):
            raise ValueError("Sweep lambdas must form a geometric sequence")
    return lambdas


def _line_fit(lambdas: Sequence[float], values: Sequence[float]):
    x = np.log2(lambdas)
    y = np.log2(values)
    fit = stats.linregress(x, y)
    residual = float(np.sqrt(np.mean((y - (fit.intercept + fit.slope * x)) ** 2)))
    return float(fit.slope), float(fit.intercept), residual, float(fit.stderr)


def fit_decay(lambdas: Sequence[float], norms: Sequence[float], uppers: Sequence[float] = None,
              minimum: int = None, geometric: bool = True) -> DecayFit:
    """
    Fit norm ~ C lambda^slope on log2-log2 data

    Args:
        lambdas: Strictly increasing sweep (at least min_lambdas values)
        norms: Positive measured values
        uppers: Optional upper bounds fitted alongside
        minimum: Smallest accepted sweep length (default min_lambdas)
        geometric: Require a constant ratio between consecutive lambdas

    Returns:
        DecayFit
    """
    lambdas = _check_lambdas(lambdas, minimum, geometric)
    norms = [float(v) for v in norms]
    if len(norms) != len(lambdas) or any(v <= 0 for v in norms):
        raise ValueError("Need one positive norm per lambda")
    slope, intercept, residual, stderr = _line_fit(lambdas, norms)
    fit = DecayFit(lambdas, norms, slope, intercept, residual, stderr)
    if uppers is not None and all(u > 0 for u in uppers):
        fit.uppers = [float(u) for u in uppers]
        fit.upper_slope = _line_fit(lambdas, fit.uppers)[0]
    return fit


def lambda_sweep(start: float = None, ratio: float = None, count: int = None) -> List[float]:
    spec = EXPERIMENTS['lambda']
    start = spec['start'] if start is None else start
    ratio = spec['ratio'] if ratio is None else ratio
    count = spec['count'] if count is None else count
    return [start * ratio ** i for i in range(count)]


def _over_lambdas(job: Callable[[float], dict], lambdas: Sequence[float], threads: int, desc: str) -> List[dict]:
    """Run one job per lambda on a thread pool; results come back keyed and ordered by lambda"""
    results: Dict[float, dict] = {}
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = {pool.submit(job, lam): lam for lam in lambdas}
        for future in tqdm(as_completed(futures), total=len(futures), desc=desc):
            results[futures[future]] = future.result()
    return [results[lam] for lam in lambdas]


def _verdict(ok: bool) -> str:
    return PASS if ok else FAIL


def decay_fit(cfg: OperatorConfig, variant, p: float, lambdas: Sequence[float], grid_size: int = None,
              seed: int = 0, threads: int = 1, check: bool = True) -> ExperimentReport:
    """
    Measure the variant's L^p norm across a lambda sweep and fit the decay slope

    Lower bounds come from opnorm2 (p = 2) or opnorm_p_lower, upper bounds
    from the discrete Schur test on the same matrix. The refinement check
    runs at the largest lambda first.

    Raises:
        ResolutionInadequate: the norm at the largest lambda is not resolved
    """
    variant = Variant.parse(variant) if isinstance(variant, str) else variant
    lambdas = _check_lambdas(lambdas)
    n, mu = cfg.degree, cfg.kernel.mu

    resolution = None
    if check:
        top_grid = grid_for_lambda(cfg.with_lambda(lambdas[-1]), base_size=grid_size)
        resolution = check_resolution(cfg.with_lambda(lambdas[-1]), variant, len(top_grid.x_nodes), threads=1)

    def job(lam):
        local = cfg.with_lambda(lam)
        grid = grid_for_lambda(local, base_size=grid_size, p=p)
        A = discretize(local, variant, grid)
        estimate = opnorm2(A, seed=seed) if p == 2 else opnorm_p_lower(A, p, seed=seed)
        upper = matrix_schur_bound(A, p)
        if estimate.value > upper * (1 + 1e-9):
            logger.error(f"Lower bound {estimate.value:.6g} exceeds Schur bound {upper:.6g} at lambda={lam:g}")
        return {
            'lambda': lam, 'variant': str(variant), 'p': p, 'lower_norm': estimate.value,
            'schur_upper': upper, 'grid_size': len(grid.x_nodes), 'error_budget': A.error_budget,
            'converged': estimate.converged
        }

    rows = _over_lambdas(job, lambdas, threads, f"decay {variant} p={p:g}")
    fit = fit_decay(lambdas, [r['lower_norm'] for r in rows], [r['schur_upper'] for r in rows])
    target = expected_slope(n, mu)
    bracket_ok = all(r['lower_norm'] <= r['schur_upper'] * (1 + 1e-9) for r in rows)
    verdict = _verdict(bracket_ok and abs(fit.slope - target) <= ACCEPTANCE['decay_slope_tol'])
    return ExperimentReport(
        name='decay',
        verdict=verdict,
        rows=rows,
        summary=f"{fit}, expected {target:.4f}, {verdict}",
        details={'fit': fit, 'expected_slope': target, 'resolution': resolution, 'bracket_ok': bracket_ok}
    )


def schur_decay(cfg: OperatorConfig, lambdas: Sequence[float], variant='T1',
                threads: int = 1) -> ExperimentReport:
    """Sup-row (A1) and sup-column (A2) integrals of |Ker| across a sweep, both fitted"""
    variant = Variant.parse(variant) if isinstance(variant, str) else variant
    lambdas = _check_lambdas(lambdas)

    def job(lam):
        bounds = schur_bounds(cfg, variant, lam)
        return {'lambda': lam, 'variant': str(variant), 'A1': bounds.A1, 'A2': bounds.A2,
                'x_star': bounds.x_star, 'y_star': bounds.y_star}

    rows = _over_lambdas(job, lambdas, threads, f"schur {variant}")
    row_fit = fit_decay(lambdas, [r['A1'] for r in rows])
    col_fit = fit_decay(lambdas, [r['A2'] for r in rows])
    target = expected_slope(cfg.degree, cfg.kernel.mu)
    tol = ACCEPTANCE['schur_slope_tol']
    verdict = _verdict(abs(row_fit.slope - target) <= tol and abs(col_fit.slope - target) <= tol)
    return ExperimentReport(
        name='schur',
        verdict=verdict,
        rows=rows,
        summary=f"A1 {row_fit}, A2 {col_fit}, expected {target:.4f}, {verdict}",
        details={'row_fit': row_fit, 'column_fit': col_fit, 'expected_slope': target}
    )


def size_vs_oscillation(n: int, mu: float, lam: float, max_level: int = None) -> dict:
    """
    Per-scale minimum of the oscillatory bound lam^{mu/n - 1/2} and the size
    bound 2^{-k(n/2 - mu)}; their sum over k carries the log2(lam) factor
    """
    max_level = max_level or int(math.ceil(math.log2(lam))) + 10
    oscillatory = lam ** (mu / n - 0.5)
    rows = []
    for k in range(max_level + 1):
        size = 2.0 ** (-k * (n / 2 - mu))
        rows.append({'k': k, 'oscillatory': oscillatory, 'size': size, 'bound': min(oscillatory, size)})
    return {
        'lambda': lam,
        'rows': rows,
        'total': sum(r['bound'] for r in rows),
        'crossover': math.log2(lam) / n
    }


def damped_l2_sweep(cfg: OperatorConfig, region, z: complex, lambdas: Sequence[float],
                    grid_size: int = None, seed: int = 0, threads: int = 1,
                    imag_shift: float = 1.0) -> ExperimentReport:
    """
    ||T_region^z||_2 across a sweep for Re z = 1/2: slope against mu/n - 1/2,
    and the log-normalized ratios norm / (lam^{mu/n-1/2} log2 lam), which may
    grow by at most the bounded-ratio factor

    The same sweep is repeated at z + i * imag_shift (skipped for a zero
    shift); the two slopes have to agree within damped_imag_slope_tol.
    """
    region = Region.parse(region)
    z = complex(z)
    if cfg.degree < 3:
        raise ValueError("Damped sweeps need n >= 3")
    if abs(z.real - 0.5) > 1e-12:
        raise ValueError(f"Damped L2 sweep needs Re z = 1/2, got {z}")
    lambdas = _check_lambdas(lambdas)
    if lambdas[0] <= 1:
        raise ValueError("Damped L2 sweep needs lambdas > 1 for the log normalization")
    n, mu = cfg.degree, cfg.kernel.mu
    target = mu / n - 0.5

    def sweep(zeta):
        variant = Variant('damped', region=region, z=zeta)
        rows = _over_lambdas(lambda lam: _damped_row(cfg, variant, lam, grid_size, seed),
                             lambdas, threads, f"damped {region.value} z={zeta}")
        return rows, fit_decay(lambdas, [r['lower_norm'] for r in rows])

    rows, fit = sweep(z)
    ratios = [r['log_normalized'] for r in rows]
    growth = max(ratios[i] / min(ratios[:i + 1]) for i in range(len(ratios)))
    ok = abs(fit.slope - target) <= ACCEPTANCE['damped_slope_tol'] and growth <= EXPERIMENTS['bounded_ratio']
    details = {'fit': fit, 'expected_slope': target, 'log_growth': growth}
    summary = f"{fit}, expected {target:.4f}, log-normalized growth {growth:.3f}"

    if imag_shift:
        shifted = z + 1j * imag_shift
        shifted_rows, shifted_fit = sweep(shifted)
        gap = abs(shifted_fit.slope - fit.slope)
        ok = ok and gap <= ACCEPTANCE['damped_imag_slope_tol']
        rows = rows + shifted_rows
        details.update({'shifted_z': shifted, 'shifted_fit': shifted_fit, 'imag_slope_gap': gap})
        summary += f", slope gap at z={shifted} {gap:.4f}"

    verdict = _verdict(ok)
    return ExperimentReport(
        name='damped',
        verdict=verdict,
        rows=rows,
        summary=f"{summary}, {verdict}",
        details=details
    )


def _damped_row(cfg: OperatorConfig, variant: Variant, lam: float, grid_size: int, seed: int) -> dict:
    n, mu = cfg.degree, cfg.kernel.mu
    local = cfg.with_lambda(lam)
    A = discretize(local, variant, grid_for_lambda(local, base_size=grid_size))
    estimate = opnorm2(A, seed=seed)
    ratio = estimate.value / (lam ** (mu / n - 0.5) * math.log2(lam))
    return {
        'lambda': lam, 'variant': str(variant), 'p': 2.0, 'lower_norm': estimate.value,
        'log_normalized': ratio, 'size_vs_oscillation': size_vs_oscillation(n, mu, lam)['total'],
        'grid_size': len(A.grids.x_nodes), 'converged': estimate.converged
    }


def endpoint_family(nodes: np.ndarray) -> List[np.ndarray]:
    """Scaled bumps at 2^{-s}, s = 1..9, both signs, and the indicators of +-[1/8, 1/4]"""
    functions = scaled_bumps(nodes)
    functions += [SampledFunction.indicator(0.125, 0.25), SampledFunction.indicator(-0.25, -0.125)]
    size = EXPERIMENTS['endpoint_family_size']
    values = [f(nodes) for f in functions[:size]]
    family = [v for v in values if np.any(v)]
    if len(family) < size:
        logger.warning(f"Endpoint family: {len(family)} of {size} test functions survive on {len(nodes)} nodes")
    return family


def endpoint_l1_check(cfg: OperatorConfig, region, lambdas: Sequence[float], grid_size: int = None,
                      threads: int = 1) -> ExperimentReport:
    """
    Damped endpoint at z = -(1-mu)/(n-2): the largest ||T_Y^z f||_1 / ||f||_1
    (region Y) or weak-L^1 quasinorm ratio (region X) over the test family
    must not grow by more than the bounded-ratio factor across the sweep
    """
    region = Region.parse(region)
    n, mu = cfg.degree, cfg.kernel.mu
    if n < 3:
        raise ValueError("Endpoint check needs n >= 3")
    lambdas = _check_lambdas(lambdas)
    z = complex(-(1 - mu) / (n - 2))
    variant = Variant('damped', region=region, z=z)

    def job(lam):
        local = cfg.with_lambda(lam)
        A = discretize(local, variant, grid_for_lambda(local, base_size=grid_size))
        wx, wy = A.grids.x_weights, A.grids.y_weights
        family = endpoint_family(A.grids.y_nodes)
        ratios = []
        for f in family:
            image = A.apply(f)
            size = weak_l1_quasinorm(image, wx) if region == Region.X else lp_norm(image, wx, 1)
            ratios.append(size / lp_norm(f, wy, 1))
        return {'lambda': lam, 'variant': str(variant), 'functional': 'weak_l1' if region == Region.X else 'l1',
                'max_ratio': max(ratios), 'family_size': len(family), 'grid_size': len(A.grids.x_nodes)}

    rows = _over_lambdas(job, lambdas, threads, f"endpoint {region.value}")
    growth = rows[-1]['max_ratio'] / rows[0]['max_ratio']
    verdict = _verdict(growth <= EXPERIMENTS['bounded_ratio'])
    return ExperimentReport(
        name='endpoint',
        verdict=verdict,
        rows=rows,
        summary=f"z={z.real:.4f}, growth {growth:.3f} (limit {EXPERIMENTS['bounded_ratio']:g}), {verdict}",
        details={'z': z, 'growth': growth}
    )


def counterexample_config(n: int, mu: float, lam: float, E: float = 1.0, **overrides) -> OperatorConfig:
    """S = x^{n-1} y + x y^{n-1} with the pure power kernel |x - y|^{-mu}"""
    coeffs = [1.0] + [0.0] * (n - 3) + [1.0]
    return OperatorConfig(HomogeneousPhase(n, coeffs), SingularKernel(mu, E=E), lam, **overrides)


def counterexample(n: int, mu: float, p: float, lambdas: Sequence[float], swapped: bool = False,
                   samples: int = None, grid_size: int = None, threads: int = 1,
                   quad_tol: float = None) -> ExperimentReport:
    """
    Explicit example defeating the sharp decay outside the necessary range

    f is the indicator of [1/8, 1/4] (inside the plateau of psi). At each
    lambda: |Tf(x)| >= 1/10 on samples of [0, 1/(100 lam)], which gives
    ||Tf||_p >= min|Tf| (1/(100 lam))^{1/p}; the measured ||Tf||_p is reported
    next to it. The verdict rests on the measured norm: its slope may not
    fall below -1/p, and beyond p = n/(1-mu) the product ||Tf||_p lam^{(1-mu)/n}
    has to grow. With swapped=True the adjoint is tested with p' instead,
    exhibiting the condition p >= n/(n-1+mu).

    Lambdas may be any increasing set of at least counterexample_min_lambdas
    values, e.g. 50, 200, 800.
    """
    if not 1 < p < math.inf:
        raise ValueError(f"counterexample needs 1 < p < inf, got {p}")
    samples = samples or EXPERIMENTS['counterexample_samples']
    minimum = EXPERIMENTS['counterexample_min_lambdas']
    lambdas = _check_lambdas(lambdas, minimum, geometric=False)
    lo, hi = EXPERIMENTS['counterexample_interval']
    f = SampledFunction.indicator(lo, hi)
    exponent = p / (p - 1) if swapped else p
    overrides = {} if quad_tol is None else {'quad_tol': quad_tol}

    def job(lam):
        cfg = counterexample_config(n, mu, lam, **overrides)
        xs = np.linspace(0.0, 1.0 / (100 * lam), samples)
        if swapped:
            values = np.array([adjoint_apply(cfg, f, x) for x in xs])
        else:
            values = np.array([r.value for r in apply_many(cfg, Variant('T'), f, xs)])
        pointwise = float(np.abs(values).min())
        grid = grid_for_lambda(cfg, base_size=grid_size)
        A = discretize(cfg, 'T', grid)
        image = (A.adjoint() if swapped else A).apply(f(grid.y_nodes))
        return {
            'lambda': lam, 'p': exponent, 'swapped': swapped, 'min_abs_Tf': pointwise,
            'implied_lower': pointwise * (1.0 / (100 * lam)) ** (1.0 / exponent),
            'pointwise_bound': 0.1 * (1.0 / (100 * lam)) ** (1.0 / exponent),
            'measured_norm': lp_norm(image, grid.y_weights if swapped else grid.x_weights, exponent),
            'grid_size': len(grid.x_nodes)
        }

    rows = _over_lambdas(job, lambdas, threads, f"counterexample p={exponent:g}")
    sweep = {'minimum': minimum, 'geometric': False}
    lower_fit = fit_decay(lambdas, [r['implied_lower'] for r in rows], **sweep)
    measured_fit = fit_decay(lambdas, [r['measured_norm'] for r in rows], **sweep)
    decay = (1 - mu) / n
    growth_fit = fit_decay(lambdas, [r['measured_norm'] * r['lambda'] ** decay for r in rows], **sweep)
    pointwise_ok = all(r['min_abs_Tf'] >= ACCEPTANCE['counterexample_pointwise'] for r in rows)
    slope_ok = measured_fit.slope >= -1.0 / exponent - ACCEPTANCE['counterexample_slope_tol']
    beyond = exponent > n / (1 - mu)
    growth_ok = growth_fit.slope > 0 if beyond else True
    verdict = _verdict(pointwise_ok and slope_ok and growth_ok)
    necessary = f"p >= {n / (n - 1 + mu):.4f}" if swapped else f"p <= {n / (1 - mu):.4f}"
    return ExperimentReport(
        name='counterexample',
        verdict=verdict,
        rows=rows,
        summary=(f"min|Tf|={min(r['min_abs_Tf'] for r in rows):.4f}, measured {measured_fit}, "
                 f"growth slope {growth_fit.slope:.4f}, necessary {necessary}, {verdict}"),
        details={'lower_fit': lower_fit, 'measured_fit': measured_fit, 'growth_fit': growth_fit,
                 'beyond_necessary': beyond, 'necessary': necessary}
    )


def decomposition_audit(cfg: OperatorConfig, f: SampledFunction, sample_xs: Sequence[float],
                        threads: int = 1) -> ExperimentReport:
    """
    Pointwise check of T = T1 + T2 (within 5 quad_tol) and
    T2 = T_X + T_Delta + T_Y (within 5 quad_tol plus the truncation budget)
    """
    names = ('T', 'T1', 'T2', 'group:X', 'group:Delta', 'group:Y')
    variants = [Variant.parse(v) for v in names]
    limit = 5 * cfg.quad_tol

    def job(x):
        values = [apply_variant(cfg, v, f, x).value for v in variants]
        T, T1, T2, X, D, Y = values
        budget = truncation_budget(cfg, f, x)
        split = abs(T - T1 - T2)
        groups = abs(T2 - (X + D + Y))
        return {
            'x': float(x), 'T_re': T.real, 'T_im': T.imag, 'T2_re': T2.real, 'T2_im': T2.imag,
            'split_residual': split, 'group_residual': groups, 'truncation_budget': budget,
            'pass': split <= limit and groups <= limit + budget
        }

    xs = list(sample_xs)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(tqdm(pool.map(job, xs), total=len(xs), desc="audit"))
    else:
        rows = [job(x) for x in tqdm(xs, desc="audit")]
    verdict = _verdict(all(r['pass'] for r in rows))
    return ExperimentReport(
        name='audit',
        verdict=verdict,
        rows=rows,
        summary=(f"max split residual {max(r['split_residual'] for r in rows):.3g}, "
                 f"max group residual {max(r['group_residual'] for r in rows):.3g}, "
                 f"max budget {max(r['truncation_budget'] for r in rows):.3g}, {verdict}"),
        details={'limit': limit}
    )


def local_piece_bound(n: int, mu: float, lam: float, nu: float, C_K: float,
                      delta1: float, delta2: float, p: float) -> float:
    """
    min of the oscillatory and size bounds for one localized piece (constants
    dropped); nu is the lower bound of |S''_xy| on the piece, C_K the kernel
    bound, delta1 and delta2 the x- and y-widths of its support
    """
    size = C_K * delta1 ** (1 / p) * delta2 ** (1 - 1 / p)
    if p == 2:
        return min(lam ** (mu / n - 0.5) * nu ** -0.5, size)
    q = p / (p - 1)
    if p < 2:
        oscillatory = lam ** ((2 * mu / n - 1) / q) * nu ** (-1 / q) * (C_K * delta1) ** (2 / p - 1)
    else:
        oscillatory = lam ** ((2 * mu / n - 1) / p) * nu ** (-1 / p) * (C_K * delta2) ** (1 - 2 / p)
    return min(oscillatory, size)


def piece_norms(cfg: OperatorConfig, indices: Sequence[DyadicIndex], p: float = 2.0,
                grid: GridSpec = None, seed: int = 0) -> ExperimentReport:
    """
    Measured norms of single dyadic pieces next to local_piece_bound, with
    nu from the Hessian range on the box, C_K = E 2^{mu min(j,k)},
    delta1 = 2^{-j}, delta2 = 2^{-k}
    """
    grid = grid or grid_for_lambda(cfg, p=p)
    n, mu = cfg.degree, cfg.kernel.mu
    rows = []
    for idx in indices:
        A = discretize(cfg, Variant('piece', index=idx), grid)
        measured = opnorm2(A, seed=seed).value if p == 2 else opnorm_p_lower(A, p, seed=seed).value
        nu, _ = hessian_box_range(cfg.phase, idx.j, idx.k)
        C_K = cfg.kernel.E * 2.0 ** (mu * min(idx.j, idx.k))
        bound = local_piece_bound(n, mu, cfg.lam, max(nu, 1e-300), C_K, 2.0 ** -idx.j, 2.0 ** -idx.k, p)
        rows.append({
            'j': idx.j, 'k': idx.k, 'sigma_x': idx.sigma_x, 'sigma_y': idx.sigma_y,
            'region': idx.region.value, 'p': p, 'nu': nu, 'C_K': C_K,
            'measured': measured, 'bound': bound, 'ratio': measured / bound
        })
    worst = max(r['ratio'] for r in rows) if rows else 0.0
    verdict = PASS if worst <= ACCEPTANCE['audit_factor'] else INCONCLUSIVE
    return ExperimentReport(
        name='pieces',
        verdict=verdict,
        rows=rows,
        summary=f"{len(rows)} pieces, worst measured/bound ratio {worst:.3g}, {verdict}",
        details={'worst_ratio': worst}
    )


def nearly_sharp_endpoint(cfg: OperatorConfig, lambdas: Sequence[float], grid_size: int = None,
                          seed: int = 0, threads: int = 1) -> ExperimentReport:
    """
    Lower-endpoint estimate with a log loss: at p = (n-2mu)/(n-1-mu) the ratio
    ||T||_p / (lam^{-(1-mu)/n} (log2 lam)^{(2-2mu)/(n-2mu)}) stays bounded
    """
    n, mu = cfg.degree, cfg.kernel.mu
    lambdas = _check_lambdas(lambdas)
    if lambdas[0] <= 1:
        raise ValueError("Nearly sharp endpoint needs lambdas > 1 for the log factor")
    p = (n - 2 * mu) / (n - 1 - mu)
    log_power = (2 - 2 * mu) / (n - 2 * mu)

    def job(lam):
        local = cfg.with_lambda(lam)
        A = discretize(local, 'T', grid_for_lambda(local, base_size=grid_size, p=p))
        value = opnorm_p_lower(A, p, seed=seed).value
        scale = lam ** expected_slope(n, mu) * math.log2(lam) ** log_power
        return {'lambda': lam, 'p': p, 'lower_norm': value, 'normalized': value / scale,
                'grid_size': len(A.grids.x_nodes)}

    rows = _over_lambdas(job, lambdas, threads, f"endpoint p={p:.3f}")
    normalized = [r['normalized'] for r in rows]
    spread = max(normalized) / min(normalized)
    verdict = _verdict(spread <= EXPERIMENTS['bounded_ratio'])
    return ExperimentReport(
        name='nearly_sharp',
        verdict=verdict,
        rows=rows,
        summary=f"p={p:.4f}, normalized spread {spread:.3f}, {verdict}",
        details={'p': p, 'spread': spread}
    )


def ranges_report(n: int, mu: float) -> ExperimentReport:
    report = p_ranges(n, mu)
    bookkeeping = interpolation_exponents(n, mu)
    (t_lo, t_hi), (n_lo, n_hi) = report.theorem_range, report.necessary_range
    rows = [{'n': n, 'mu': mu, 'theorem_lo': t_lo, 'theorem_hi': t_hi,
             'necessary_lo': n_lo, 'necessary_hi': n_hi, 'theta': bookkeeping['theta'],
             'interpolated_p': bookkeeping['p'], 'interpolated_decay': bookkeeping['decay']}]
    return ExperimentReport(name='ranges', verdict=PASS, rows=rows, summary=str(report),
                            details={'report': report, 'interpolation': bookkeeping})


EXPERIMENT_NAMES = ('decay', 'schur', 'damped', 'endpoint', 'counterexample',
                    'audit', 'pieces', 'nearly_sharp', 'ranges')


def run_experiment(settings: dict) -> ExperimentReport:
    """
    Dispatch a validated experiment document (see validators.validate_experiment_config)
    """
    name = settings['experiment']
    cfg = settings.get('operator')
    lambdas = settings.get('lambdas')
    threads = settings.get('threads', 1)
    seed = settings.get('seed', 0)
    grid_size = settings.get('grid_size')
    logger.info(f"Running experiment '{name}'")

    if name == 'decay':
        return decay_fit(cfg, settings['variant'], settings['p'], lambdas, grid_size=grid_size,
                         seed=seed, threads=threads, check=settings.get('check_resolution', True))
    if name == 'schur':
        return schur_decay(cfg, lambdas, settings['variant'], threads=threads)
    if name == 'damped':
        return damped_l2_sweep(cfg, settings['region'], settings['z'], lambdas, grid_size=grid_size,
                               seed=seed, threads=threads, imag_shift=settings.get('imag_shift', 1.0))
    if name == 'endpoint':
        return endpoint_l1_check(cfg, settings['region'], lambdas, grid_size=grid_size, threads=threads)
    if name == 'counterexample':
        return counterexample(cfg.degree, cfg.kernel.mu, settings['p'], lambdas,
                              swapped=settings.get('swapped', False), grid_size=grid_size,
                              threads=threads, quad_tol=cfg.quad_tol)
    if name == 'audit':
        return decomposition_audit(cfg, settings['function'], settings['sample_xs'], threads=threads)
    if name == 'pieces':
        indices = [DyadicIndex.build(j, k, cfg.threshold, sx, sy) for j, k, sx, sy in settings['indices']]
        return piece_norms(cfg, indices, settings['p'], seed=seed)
    if name == 'nearly_sharp':
        return nearly_sharp_endpoint(cfg, lambdas, grid_size=grid_size, seed=seed, threads=threads)
    if name == 'ranges':
        return ranges_report(cfg.degree, cfg.kernel.mu)
    raise ValueError(f"Unknown experiment '{name}', choose from {EXPERIMENT_NAMES}")
