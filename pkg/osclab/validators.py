"""
Configuration and result validation functions for the Oscillatory Operator Laboratory
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from .config import EXPERIMENTS, NORMS, OPERATOR, QUAD
from .errors import ConfigError, InvalidPhase
from .operator import OperatorConfig, SampledFunction, Variant
from .phase import HomogeneousPhase, Region
from .weights import SingularKernel

logger = logging.getLogger(__name__)

EXPERIMENT_REQUIREMENTS = {
    'decay': (),
    'schur': (),
    'damped': (),
    'endpoint': (),
    'counterexample': ('p',),
    'audit': ('function',),
    'pieces': ('indices',),
    'nearly_sharp': (),
    'ranges': ()
}

# Sweep shape per experiment: (smallest number of lambdas, geometric ratio required, lambdas > 1)
LAMBDA_RULES = {
    'decay': (EXPERIMENTS['min_lambdas'], True, False),
    'schur': (EXPERIMENTS['min_lambdas'], True, False),
    'damped': (EXPERIMENTS['min_lambdas'], True, True),
    'endpoint': (EXPERIMENTS['min_lambdas'], True, False),
    'nearly_sharp': (EXPERIMENTS['min_lambdas'], True, True),
    'counterexample': (EXPERIMENTS['counterexample_min_lambdas'], False, False)
}

# Experiments that estimate L^p norms need 1 < p < inf
OPEN_P_EXPERIMENTS = ('decay', 'counterexample', 'pieces')


def load_config_document(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON experiment document

    Raises:
        ConfigError: unreadable file or JSON syntax error (with line and column)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Malformed config {path}: {e.msg}", line=e.lineno, column=e.colno)
    if not isinstance(document, dict):
        raise ConfigError("Config document must be a JSON object")
    return document


def _number(value: Any, field: str, positive: bool = False, integer: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"Expected a number, got {value!r}", field=field)
    if not math.isfinite(value):
        raise ConfigError("Value must be finite", field=field)
    if integer and int(value) != value:
        raise ConfigError(f"Expected an integer, got {value!r}", field=field)
    if positive and value <= 0:
        raise ConfigError(f"Value must be positive, got {value!r}", field=field)
    return int(value) if integer else float(value)


def _section(document: Dict[str, Any], key: str) -> Dict[str, Any]:
    section = document.get(key, {})
    if not isinstance(section, dict):
        raise ConfigError("Expected an object", field=key)
    return section


def validate_phase_spec(spec: Any, field: str = 'phase') -> Tuple[HomogeneousPhase, Dict[str, int]]:
    """
    Validate a phase fragment {"degree": n, "coeffs": [a_1, ..., a_{n-1}]}

    Args:
        spec: Raw document fragment
        field: Dotted path used in error messages

    Returns:
        Tuple of (HomogeneousPhase, validation stats)
    """
    if not isinstance(spec, dict):
        raise ConfigError("Expected an object with 'degree' and 'coeffs'", field=field)
    if 'degree' not in spec:
        raise ConfigError("Missing phase degree", field=f"{field}.degree")
    degree = _number(spec['degree'], f"{field}.degree", integer=True)
    coeffs = spec.get('coeffs')
    if isinstance(coeffs, str):
        try:
            coeffs = [float(c) for c in coeffs.split(',')]
        except ValueError:
            raise ConfigError(f"Cannot parse coefficients '{coeffs}'", field=f"{field}.coeffs")
    if not isinstance(coeffs, list):
        raise ConfigError("Expected a list of coefficients", field=f"{field}.coeffs")
    coeffs = [_number(c, f"{field}.coeffs[{i}]") for i, c in enumerate(coeffs)]
    try:
        phase = HomogeneousPhase(degree, tuple(coeffs))
    except InvalidPhase as e:
        raise ConfigError(str(e), field=field)

    stats = {'degree': phase.degree, 'nonzero_terms': sum(1 for a in phase.coeffs if a != 0)}
    return phase, stats


def validate_kernel_spec(spec: Any, field: str = 'kernel') -> Tuple[SingularKernel, Dict[str, Any]]:
    """
    Validate a kernel fragment {"family": "power"|"modulated", "mu": .., "E": .., ...}

    Returns:
        Tuple of (SingularKernel, validation stats)
    """
    if not isinstance(spec, dict):
        raise ConfigError("Expected an object", field=field)
    if 'mu' not in spec:
        raise ConfigError("Missing kernel exponent", field=f"{field}.mu")
    mu = _number(spec['mu'], f"{field}.mu")
    if not 0 < mu < 1:
        raise ConfigError(f"mu must lie in (0, 1), got {mu}", field=f"{field}.mu")
    E = _number(spec.get('E', 1.0), f"{field}.E", positive=True)
    family = spec.get('family', 'power')
    try:
        kernel = SingularKernel(
            mu=mu,
            E=E,
            family=family,
            sign=int(spec.get('sign', 1)),
            modulation=spec.get('modulation', 'one')
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), field=field)

    stats = {'family': kernel.family, 'symmetric': kernel.is_symmetric}
    return kernel, stats


def validate_lambda_spec(spec: Any, field: str = 'lambda') -> Tuple[List[float], Dict[str, Any]]:
    """
    Validate a lambda sweep: {"start", "ratio", "count"} or an explicit list

    Returns:
        Tuple of (list of lambdas, validation stats)
    """
    if spec is None:
        spec = dict(EXPERIMENTS['lambda'])
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        lambdas = [_number(spec, field, positive=True)]
    elif isinstance(spec, list):
        lambdas = [_number(v, f"{field}[{i}]", positive=True) for i, v in enumerate(spec)]
    elif isinstance(spec, dict):
        defaults = EXPERIMENTS['lambda']
        start = _number(spec.get('start', defaults['start']), f"{field}.start", positive=True)
        ratio = _number(spec.get('ratio', defaults['ratio']), f"{field}.ratio", positive=True)
        count = _number(spec.get('count', defaults['count']), f"{field}.count", positive=True, integer=True)
        if ratio <= 1:
            raise ConfigError("Sweep ratio must exceed 1", field=f"{field}.ratio")
        lambdas = [start * ratio ** i for i in range(count)]
    else:
        raise ConfigError("Expected a number, a list or {start, ratio, count}", field=field)
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ConfigError("Lambdas must be strictly increasing", field=field)

    stats = {'count': len(lambdas), 'min': min(lambdas), 'max': max(lambdas)}
    return lambdas, stats


def validate_grid_spec(spec: Any, field: str = 'grid') -> Tuple[Dict[str, Any], Dict[str, int]]:
    """
    Validate a grid fragment {"size": N}

    Returns:
        Tuple of (grid settings, validation stats)
    """
    spec = spec or {}
    if not isinstance(spec, dict):
        raise ConfigError("Expected an object", field=field)
    size = _number(spec.get('size', NORMS['grid_size']), f"{field}.size", positive=True, integer=True)
    if size < 2:
        raise ConfigError("Grid needs at least 2 points", field=f"{field}.size")
    if size > NORMS['max_grid_size']:
        raise ConfigError(f"Grid size above {NORMS['max_grid_size']}", field=f"{field}.size")
    return {'size': size}, {'size': size}


def validate_function_spec(spec: Any, field: str = 'function') -> Tuple[SampledFunction, Dict[str, Any]]:
    """
    Validate a test function {"kind": "indicator"|"bump"|"exponential"|"zero", ...}

    Returns:
        Tuple of (SampledFunction, validation stats)
    """
    if spec is None:
        lo, hi = EXPERIMENTS['counterexample_interval']
        return SampledFunction.indicator(lo, hi), {'kind': 'indicator'}
    if not isinstance(spec, dict):
        raise ConfigError("Expected an object", field=field)
    kind = spec.get('kind', 'indicator')
    try:
        if kind == 'zero':
            f = SampledFunction.zero()
        elif kind == 'bump':
            f = SampledFunction.bump(_number(spec.get('center'), f"{field}.center"),
                                     _number(spec.get('width'), f"{field}.width", positive=True))
        else:
            interval = spec.get('interval', list(OPERATOR['box']))
            if not isinstance(interval, list) or len(interval) != 2:
                raise ConfigError("Expected [lo, hi]", field=f"{field}.interval")
            lo, hi = (_number(v, f"{field}.interval") for v in interval)
            if kind == 'indicator':
                f = SampledFunction.indicator(lo, hi)
            elif kind == 'exponential':
                f = SampledFunction.exponential(_number(spec.get('frequency', 0.0), f"{field}.frequency"), lo, hi)
            else:
                raise ConfigError(f"Unknown function kind '{kind}'", field=f"{field}.kind")
    except ValueError as e:
        raise ConfigError(str(e), field=field)
    return f, {'kind': kind}


def _sample_points(spec: Any, field: str) -> List[float]:
    if spec is None:
        return list(np.linspace(-0.45, 0.45, 20))
    if isinstance(spec, list):
        return [_number(v, f"{field}[{i}]") for i, v in enumerate(spec)]
    if isinstance(spec, dict):
        count = _number(spec.get('count', 20), f"{field}.count", positive=True, integer=True)
        lo, hi = spec.get('interval', [-0.45, 0.45])
        return list(np.linspace(_number(lo, f"{field}.interval"), _number(hi, f"{field}.interval"), count))
    raise ConfigError("Expected a list or {count, interval}", field=field)


def validate_operator_config(document: Dict[str, Any],
                             overrides: Dict[str, Any] = None) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """
    Validate the operator part of a document (phase, kernel, lambda, grid,
    quad, operator, seed, threads, function, sample_xs) and apply overrides

    Args:
        document: Parsed JSON document
        overrides: seed / threads / quad_tol / output values from the command line

    Returns:
        Tuple of (settings with an OperatorConfig at the first lambda, validation stats)
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    if 'phase' not in document:
        raise ConfigError("Missing phase", field='phase')
    if 'kernel' not in document:
        raise ConfigError("Missing kernel", field='kernel')

    phase, _ = validate_phase_spec(document['phase'])
    kernel, _ = validate_kernel_spec(document['kernel'])
    lambdas, lambda_stats = validate_lambda_spec(document.get('lambda'))
    grid, _ = validate_grid_spec(document.get('grid'))

    quad = _section(document, 'quad')
    quad_tol = overrides.get('quad_tol', quad.get('tol', QUAD['tol']))
    quad_tol = _number(quad_tol, 'quad.tol', positive=True)
    max_panels = _number(quad.get('max_panels', QUAD['max_panels']), 'quad.max_panels', positive=True, integer=True)

    operator = _section(document, 'operator')
    J_max = _number(operator.get('J_max', OPERATOR['J_max']), 'operator.J_max', positive=True, integer=True)
    quadrants = operator.get('quadrants', OPERATOR['quadrants'])
    try:
        quadrants = tuple(tuple(q) for q in quadrants)
        cfg = OperatorConfig(phase, kernel, lambdas[0], quad_tol=quad_tol, max_panels=max_panels,
                             J_max=J_max, quadrants=quadrants)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), field='operator')

    settings = {
        'operator': cfg,
        'lambdas': lambdas,
        'grid_size': grid['size'],
        'seed': _number(overrides.get('seed', document.get('seed', EXPERIMENTS['seed'])), 'seed', integer=True),
        'threads': _number(overrides.get('threads', document.get('threads', EXPERIMENTS['threads'])),
                           'threads', positive=True, integer=True),
        'output': overrides.get('output', document.get('output'))
    }
    settings['function'], _ = validate_function_spec(document.get('function'))
    settings['sample_xs'] = _sample_points(document.get('sample_xs'), 'sample_xs')

    stats = {'lambdas': lambda_stats['count'], 'fields': len(document)}
    return settings, stats


def _check_sweep(name: str, lambdas: List[float], field: str = 'lambda') -> None:
    """Reject lambda sets an experiment cannot fit a slope through"""
    if name not in LAMBDA_RULES:
        return
    minimum, geometric, above_one = LAMBDA_RULES[name]
    if len(lambdas) < minimum:
        raise ConfigError(f"Experiment '{name}' needs at least {minimum} lambdas, got {len(lambdas)}",
                          field=field)
    if geometric and len(lambdas) > 1:
        ratios = np.array(lambdas[1:]) / np.array(lambdas[:-1])
        if not np.allclose(ratios, ratios[0], rtol=1e-9):
            raise ConfigError(f"Experiment '{name}' needs a geometric lambda sweep", field=field)
    if above_one and lambdas[0] <= 1:
        raise ConfigError(f"Experiment '{name}' needs lambdas > 1", field=field)


def validate_experiment_config(document: Dict[str, Any],
                               overrides: Dict[str, Any] = None) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """
    Validate a full experiment document and apply command-line overrides

    Args:
        document: Parsed JSON document
        overrides: seed / threads / quad_tol / output values from the command line

    Returns:
        Tuple of (settings for experiments.run_experiment, validation stats)
    """
    name = document.get('experiment')
    if name not in EXPERIMENT_REQUIREMENTS:
        raise ConfigError(f"Unknown experiment {name!r}, choose from {sorted(EXPERIMENT_REQUIREMENTS)}",
                          field='experiment')
    for key in EXPERIMENT_REQUIREMENTS[name]:
        if key not in document:
            raise ConfigError(f"Experiment '{name}' needs '{key}'", field=key)

    settings, stats = validate_operator_config(document, overrides)
    settings['experiment'] = name
    _check_sweep(name, settings['lambdas'])
    settings['p'] = _number(document.get('p', 2.0), 'p', positive=True)
    if settings['p'] < 1:
        raise ConfigError("p must be >= 1", field='p')
    if name in OPEN_P_EXPERIMENTS and not 1 < settings['p'] < math.inf:
        raise ConfigError(f"Experiment '{name}' needs 1 < p < inf, got {settings['p']:g}", field='p')
    settings['imag_shift'] = _number(document.get('imag_shift', 1.0), 'imag_shift')
    settings['swapped'] = bool(document.get('swapped', False))
    settings['check_resolution'] = bool(document.get('check_resolution', True))

    try:
        settings['variant'] = Variant.parse(document.get('variant', 'T1' if name == 'schur' else 'T'))
    except ValueError as e:
        raise ConfigError(str(e), field='variant')
    try:
        settings['region'] = Region.parse(document.get('region', 'Y'))
    except ValueError as e:
        raise ConfigError(str(e), field='region')
    try:
        settings['z'] = complex(str(document.get('z', '0.5')).replace(' ', ''))
    except ValueError as e:
        raise ConfigError(str(e), field='z')
    indices = document.get('indices', [])
    if not isinstance(indices, list) or any(not isinstance(i, list) or len(i) != 4 for i in indices):
        raise ConfigError("Expected a list of [j, k, sigma_x, sigma_y]", field='indices')
    settings['indices'] = [tuple(int(v) for v in idx) for idx in indices]

    stats['experiment'] = name
    return settings, stats


def validate_results_table(df: pd.DataFrame) -> Tuple[pd.DataFrame, Dict[str, int]]:
    """
    Drop rows with non-finite numeric entries before a table is written

    Args:
        df: Result rows

    Returns:
        Tuple of (cleaned DataFrame, validation stats)
    """
    stats = {'original_rows': len(df)}
    numeric = df.select_dtypes(include=[np.number])
    finite = np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1) if len(numeric.columns) else \
        np.ones(len(df), dtype=bool)
    df = df[finite]
    stats['non_finite_rows'] = stats['original_rows'] - len(df)
    if stats['non_finite_rows']:
        logger.warning(f"Dropped {stats['non_finite_rows']} result rows with non-finite values")
    return df, stats
