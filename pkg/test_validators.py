import json
import logging
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd

from osclab.errors import ConfigError
from osclab.phase import Region
from osclab.validators import (
    load_config_document, validate_experiment_config, validate_function_spec,
    validate_kernel_spec, validate_lambda_spec, validate_operator_config,
    validate_phase_spec, validate_results_table
)

logging.basicConfig(
    level=logging.DEBUG,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)


class TestConfigValidation(unittest.TestCase):
    def setUp(self):
        self.document = {
            'experiment': 'decay',
            'phase': {'degree': 4, 'coeffs': [1, 0, 1]},
            'kernel': {'mu': 0.5},
            'lambda': {'start': 8, 'ratio': 2, 'count': 4},
            'grid': {'size': 64},
            'p': 2
        }

    def test_phase_fragment(self):
        """Phase coefficients may come as a list or a comma string"""
        phase, stats = validate_phase_spec({'degree': 4, 'coeffs': '1,0,1'})
        self.assertEqual(phase.coeffs, (1.0, 0.0, 1.0))
        self.assertEqual(stats['nonzero_terms'], 2)

        with self.assertRaises(ConfigError) as ctx:
            validate_phase_spec({'coeffs': [1, 1]})
        self.assertEqual(ctx.exception.field, 'phase.degree')
        with self.assertRaises(ConfigError):
            validate_phase_spec({'degree': 4, 'coeffs': [0, 1, 1]})

    def test_kernel_fragment(self):
        kernel, stats = validate_kernel_spec({'mu': 0.25, 'E': 2, 'family': 'modulated', 'modulation': 'cos_diff'})
        self.assertEqual(kernel.E, 2.0)
        self.assertTrue(stats['symmetric'])
        for bad in ({'mu': 1.5}, {'mu': 0.5, 'E': -1}, {'mu': 0.5, 'family': 'gaussian'}, {'E': 1}):
            with self.assertRaises(ConfigError):
                validate_kernel_spec(bad)

    def test_lambda_fragment(self):
        lambdas, stats = validate_lambda_spec({'start': 8, 'ratio': 2, 'count': 4})
        self.assertEqual(lambdas, [8.0, 16.0, 32.0, 64.0])
        self.assertEqual(stats['max'], 64.0)
        self.assertEqual(validate_lambda_spec([1, 10, 100])[0], [1.0, 10.0, 100.0])
        with self.assertRaises(ConfigError):
            validate_lambda_spec([4, 2])
        with self.assertRaises(ConfigError):
            validate_lambda_spec({'ratio': 1})

    def test_function_fragment(self):
        f, _ = validate_function_spec({'kind': 'bump', 'center': 0.1, 'width': 0.05})
        self.assertEqual(f.kind, 'bump')
        with self.assertRaises(ConfigError):
            validate_function_spec({'kind': 'bump', 'center': 0.1})
        with self.assertRaises(ConfigError):
            validate_function_spec({'kind': 'triangle'})

    def test_operator_config(self):
        settings, stats = validate_operator_config(self.document, {'seed': 5, 'threads': None})
        self.assertEqual(settings['operator'].lam, 8.0)
        self.assertEqual(settings['seed'], 5)
        self.assertEqual(settings['threads'], 1)
        self.assertEqual(settings['grid_size'], 64)
        self.assertEqual(len(settings['sample_xs']), 20)
        self.assertEqual(stats['lambdas'], 4)

    def test_experiment_config(self):
        document = dict(self.document, experiment='damped', region='X', z='0.5+2j')
        settings, _ = validate_experiment_config(document, {'quad_tol': 1e-6})
        self.assertEqual(settings['region'], Region.X)
        self.assertEqual(settings['z'], 0.5 + 2j)
        self.assertEqual(settings['operator'].quad_tol, 1e-6)

    def test_experiment_requirements(self):
        with self.assertRaises(ConfigError):
            validate_experiment_config(dict(self.document, experiment='nonsense'))
        with self.assertRaises(ConfigError) as ctx:
            validate_experiment_config(dict(self.document, experiment='counterexample', p=None))
        self.assertIn('p', str(ctx.exception))
        document = dict(self.document, experiment='counterexample')
        document.pop('p')
        with self.assertRaises(ConfigError):
            validate_experiment_config(document)

    def test_schur_defaults_to_near_part(self):
        settings, _ = validate_experiment_config(dict(self.document, experiment='schur'))
        self.assertEqual(str(settings['variant']), 'T1')

    def test_exponent_must_exceed_one(self):
        """p = 1 gives p' = inf; decay, counterexample and pieces need 1 < p < inf"""
        for name in ('decay', 'counterexample', 'pieces'):
            document = dict(self.document, experiment=name, p=1, indices=[[4, 0, 1, 1]])
            with self.assertRaises(ConfigError) as ctx:
                validate_experiment_config(document)
            self.assertEqual(ctx.exception.field, 'p')
        with self.assertRaises(ConfigError) as ctx:
            validate_experiment_config(dict(self.document, p=0.5))
        self.assertEqual(ctx.exception.field, 'p')

    def test_lambda_sweep_rules(self):
        for lambdas in ([8, 16, 32], [8, 16, 40, 64]):
            with self.assertRaises(ConfigError) as ctx:
                validate_experiment_config(dict(self.document, **{'lambda': lambdas}))
            self.assertEqual(ctx.exception.field, 'lambda')

        document = dict(self.document, experiment='counterexample', p=12, **{'lambda': [50, 200, 800]})
        settings, _ = validate_experiment_config(document)
        self.assertEqual(settings['lambdas'], [50.0, 200.0, 800.0])
        with self.assertRaises(ConfigError):
            validate_experiment_config(dict(document, **{'lambda': [50, 200]}))

        damped = dict(self.document, experiment='damped', region='Y', z=0.5,
                      **{'lambda': {'start': 1, 'ratio': 2, 'count': 4}})
        with self.assertRaises(ConfigError) as ctx:
            validate_experiment_config(damped)
        self.assertEqual(ctx.exception.field, 'lambda')

    def test_imaginary_shift(self):
        document = dict(self.document, experiment='damped', region='Y', z=0.5)
        settings, _ = validate_experiment_config(document)
        self.assertEqual(settings['imag_shift'], 1.0)
        settings, _ = validate_experiment_config(dict(document, imag_shift=0))
        self.assertEqual(settings['imag_shift'], 0.0)
        with self.assertRaises(ConfigError):
            validate_experiment_config(dict(document, imag_shift='wide'))


class TestDocuments(unittest.TestCase):
    def test_malformed_json_reports_position(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'broken.json'
            path.write_text('{\n  "experiment": "decay",\n  "phase": \n}', encoding='utf-8')
            with self.assertRaises(ConfigError) as ctx:
                load_config_document(path)
            print(f"\n{ctx.exception}")
            self.assertEqual(ctx.exception.line, 4)

    def test_round_trip_document(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'ok.json'
            path.write_text(json.dumps({'experiment': 'ranges'}), encoding='utf-8')
            self.assertEqual(load_config_document(path), {'experiment': 'ranges'})
            with self.assertRaises(ConfigError):
                load_config_document(Path(tmp) / 'missing.json')


class TestResultsTable(unittest.TestCase):
    def test_drops_non_finite_rows(self):
        df = pd.DataFrame({'lambda': [1.0, 2.0, 4.0], 'norm': [0.5, np.nan, np.inf], 'variant': ['T'] * 3})
        cleaned, stats = validate_results_table(df)
        print("\nValidation stats:")
        print(stats)
        self.assertEqual(len(cleaned), 1)
        self.assertEqual(stats['non_finite_rows'], 2)


def run_interactive_test():
    """Run the validation tests with verbose output"""
    print("=== Oscillatory Operator Laboratory Validation Suite ===\n")

    for case in (TestConfigValidation, TestDocuments, TestResultsTable):
        suite = unittest.TestLoader().loadTestsFromTestCase(case)
        unittest.TextTestRunner(verbosity=2).run(suite)


if __name__ == '__main__':
    run_interactive_test()
