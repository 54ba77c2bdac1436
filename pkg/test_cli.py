"""
Tests for the osclab command line
"""

import json

import pandas as pd
import pytest

from osclab.cli import main
from osclab.config import EXIT_CODES


def write_config(path, **extra):
    document = {
        'phase': {'degree': 4, 'coeffs': [1, 0, 1]},
        'kernel': {'mu': 0.5},
        'lambda': [8],
        'quad': {'tol': 1e-7}
    }
    document.update(extra)
    path.write_text(json.dumps(document), encoding='utf-8')
    return str(path)


def test_factor_prints_factorization(capsys):
    assert main(['factor', '--degree', '4', '--coeffs', '1,0,1']) == 0
    assert capsys.readouterr().out.strip() == "3 * (x^2+y^2)"

    assert main(['factor', '--degree', '3', '--coeffs', '1,1']) == 0
    assert capsys.readouterr().out.strip() == "2 * (y+x)"


def test_factor_rejects_invalid_phase(capsys):
    assert main(['factor', '--degree', '4', '--coeffs', '0,0,1']) == EXIT_CODES['degenerate']
    assert 'error' in capsys.readouterr().err


def test_ranges(capsys):
    assert main(['ranges', '--n', '4', '--mu', '0.5']) == 0
    out = capsys.readouterr().out
    assert "[1.200, 6.000] ⊂ [1.143, 8.000]" in out
    assert "p=1.2000" in out

    assert main(['ranges', '--n', '2', '--mu', '0.5']) == EXIT_CODES['usage']


def test_usage_errors_exit_64():
    with pytest.raises(SystemExit) as excinfo:
        main(['factor'])
    assert excinfo.value.code == 64
    with pytest.raises(SystemExit) as excinfo:
        main(['no-such-command'])
    assert excinfo.value.code == 64


def test_missing_config_is_usage_error(capsys):
    assert main(['sweep']) == EXIT_CODES['usage']
    assert main(['sweep', '--config', 'does/not/exist.json']) == EXIT_CODES['usage']


def test_verify_kernel(capsys):
    assert main(['verify-kernel', '--mu', '0.5', '--samples', '200']) == 0
    assert 'size' in capsys.readouterr().out
    assert main(['verify-kernel', '--mu', '0.5', '--E', '0.5', '--samples', '200']) == EXIT_CODES['fail']


def test_sweep_writes_manifest(tmp_path, capsys):
    config = write_config(tmp_path / 'ranges.json', experiment='ranges')
    out_dir = tmp_path / 'out'
    assert main(['sweep', '--config', config, '--out', str(out_dir)]) == 0
    manifest = json.loads((out_dir / 'manifest.json').read_text(encoding='utf-8'))
    assert manifest['command'] == 'sweep'
    assert manifest['verdicts'] == {'ranges': 'pass'}
    assert (out_dir / 'ranges.csv').exists()


def test_sweep_unknown_experiment(tmp_path):
    config = write_config(tmp_path / 'bad.json', experiment='magic')
    assert main(['sweep', '--config', config, '--out', str(tmp_path / 'out')]) == EXIT_CODES['usage']


def test_apply_reports_split_residual(tmp_path):
    config = write_config(tmp_path / 'apply.json', function={'kind': 'indicator', 'interval': [-0.2, 0.3]})
    out_dir = tmp_path / 'apply'
    code = main(['apply', '--config', config, '--variants', 'T,T1,T2', '--x', '0.1,0.2', '--out', str(out_dir)])
    assert code == 0
    table = pd.read_csv(out_dir / 'apply.csv')
    assert set(table['variant']) == {'T', 'T1', 'T2', 'T-T1-T2'}
    residuals = table[table['variant'] == 'T-T1-T2']
    assert len(residuals) == 2
    assert ((residuals['re'] ** 2 + residuals['im'] ** 2) ** 0.5 < 5e-7).all()


def test_apply_bad_variant(tmp_path):
    config = write_config(tmp_path / 'apply.json')
    assert main(['apply', '--config', config, '--variants', 'T9', '--out', str(tmp_path / 'o')]) == EXIT_CODES['usage']


def test_apply_zero_function(tmp_path):
    config = write_config(tmp_path / 'zero.json', function={'kind': 'zero'})
    out_dir = tmp_path / 'zero'
    assert main(['apply', '--config', config, '--x', '0.0,0.25', '--out', str(out_dir)]) == 0
    table = pd.read_csv(out_dir / 'apply.csv')
    assert len(table) == 2
    assert (table['re'] == 0).all() and (table['im'] == 0).all()


def test_sweep_rejects_bad_sweeps(tmp_path):
    short = write_config(tmp_path / 'short.json', experiment='decay', p=3, **{'lambda': [4, 8, 16]})
    assert main(['sweep', '--config', short, '--out', str(tmp_path / 'a')]) == EXIT_CODES['usage']
    open_p = write_config(tmp_path / 'p1.json', experiment='counterexample', p=1, **{'lambda': [50, 200, 800]})
    assert main(['sweep', '--config', open_p, '--out', str(tmp_path / 'b')]) == EXIT_CODES['usage']


def test_sweep_is_reproducible(tmp_path):
    """Same document and seed give a byte-identical table"""
    config = write_config(tmp_path / 'decay.json', experiment='decay', p=3, grid={'size': 32},
                          check_resolution=False, seed=7, **{'lambda': [4, 8, 16, 32]})
    tables = []
    for name in ('first', 'second'):
        out_dir = tmp_path / name
        assert main(['sweep', '--config', config, '--out', str(out_dir)]) in (EXIT_CODES['pass'], EXIT_CODES['fail'])
        tables.append((out_dir / 'decay.csv').read_bytes())
    assert tables[0] == tables[1]
    assert len(tables[0]) > 0
