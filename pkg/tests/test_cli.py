import json
from unittest.mock import patch

import pytest

from app import __version__
from app.epinet_cli import (
    EXIT_CONFIG,
    EXIT_CONVERGENCE,
    EXIT_ERROR,
    EXIT_OK,
    EXIT_PRECONDITION,
    build_parser,
    collect_overrides,
    main,
)
from app.exceptions import ConvergenceError


@pytest.fixture
def workspace(tmp_path, clean_env):
    clean_env.setenv('EPINET_BASE_DIR', str(tmp_path))
    clean_env.setenv('EPINET_ODE_MAX_STEP', '1.0')
    return tmp_path


def test_ce_prints_equilibrium(workspace, capsys):
    assert main(['ce']) == EXIT_OK
    out = capsys.readouterr().out
    assert 'a_ce' in out
    assert 'theta_ce' in out
    assert (workspace / 'output' / 'results.csv').exists()


def test_steady_prints_regime(workspace, capsys):
    assert main(['steady', '--a', '3']) == EXIT_OK
    assert 'regime: extinct' in capsys.readouterr().out


def test_protect_fixed(workspace, capsys):
    assert main(['protect', '--mode', 'fixed', '--a', '4.47', '--gamma', '0.3', '--out', str(workspace / 'p')]) == EXIT_OK
    out = capsys.readouterr().out
    assert 'eta_star' in out
    assert 'regime@gamma=0.3: interior' in out


def test_shape_flags(workspace):
    argv = ['ce', '--utility', 'exponential', '--shape', 'kappa=2', '--shape', 'lam=0.3']
    assert main(argv) == EXIT_OK


def test_sweep_prints_summary(workspace, capsys):
    assert main(['sweep', '--sweep-mode', 'steady', '--axis', 'a=2,4,6']) == EXIT_OK
    assert '3 cells' in capsys.readouterr().out


def test_config_file_with_flag_override(workspace, capsys):
    config = workspace / 'scenario.json'
    config.write_text(json.dumps({'mode': 'steady', 'a': 2.0}), encoding='utf-8')
    assert main(['run', '--config', str(config), '--a', '6']) == EXIT_OK
    assert 'regime: endemic' in capsys.readouterr().out


def test_manifest_rerun(workspace):
    assert main(['ce', '--out', str(workspace / 'first')]) == EXIT_OK
    manifest = workspace / 'first' / 'manifest.json'
    assert main(['run', '--manifest', str(manifest), '--out', str(workspace / 'second')]) == EXIT_OK
    first = (workspace / 'first' / 'results.csv').read_bytes()
    assert (workspace / 'second' / 'results.csv').read_bytes() == first


def test_preset_run(workspace):
    assert main(['run', '--scenario', 'fig3', '--out', str(workspace / 'fig3')]) == EXIT_OK
    assert (workspace / 'fig3' / 'cost' / 'results.csv').exists()


# Exit codes

def test_bad_config_file(workspace, capsys):
    config = workspace / 'broken.json'
    config.write_text('{not json', encoding='utf-8')
    assert main(['run', '--config', str(config)]) == EXIT_CONFIG
    assert 'Configuration error' in capsys.readouterr().err


def test_run_without_source(workspace, capsys):
    assert main(['run']) == EXIT_CONFIG
    assert 'needs --config, --scenario or --manifest' in capsys.readouterr().err


def test_too_many_axes(workspace):
    argv = ['sweep', '--sweep-mode', 'steady', '--axis', 'a=1,2', '--axis', 'delta=0.2', '--axis', 'beta=0.1']
    assert main(argv) == EXIT_CONFIG


def test_invalid_parameter(workspace):
    assert main(['ce', '--beta', '-1']) == EXIT_CONFIG


def test_trivial_regime(workspace, capsys):
    assert main(['ce', '--c0', '0.3']) == EXIT_PRECONDITION
    assert 'Precondition not met' in capsys.readouterr().err


def test_strategic_protection_needs_concave_derivative(workspace):
    assert main(['protect', '--mode', 'strategic', '--gamma', '0.5']) == EXIT_PRECONDITION


@patch('app.runner.solve_ce', side_effect=ConvergenceError("no sign change"))
def test_convergence_failure(solve_ce_mock, workspace, capsys):
    assert main(['ce']) == EXIT_CONVERGENCE
    assert 'Solver did not converge: no sign change' in capsys.readouterr().err


@patch('app.runner.solve_ce', side_effect=RuntimeError("boom"))
def test_unexpected_failure(solve_ce_mock, workspace):
    assert main(['ce']) == EXIT_ERROR


# Parsing

def test_bad_axis_name():
    with pytest.raises(SystemExit):
        build_parser().parse_args(['sweep', '--axis', 'kappa=1,2'])


def test_axis_range_syntax():
    args = build_parser().parse_args(['sweep', '--axis', 'a=0:1:5'])
    assert args.axis == [('a', [0.0, 0.25, 0.5, 0.75, 1.0])]


def test_bad_shape_entry():
    with pytest.raises(SystemExit):
        build_parser().parse_args(['ce', '--shape', 'kappa'])


def test_collect_overrides():
    args = build_parser().parse_args(['protect', '--mode', 'strategic', '--gamma', '0.5', '0.9', '--immunized', '0.2'])
    overrides = collect_overrides(args)
    assert overrides == {
        'protect_mode': 'strategic', 'gamma': [0.5, 0.9], 'immunized_fraction': 0.2, 'mode': 'protect',
    }


def test_version(capsys):
    with pytest.raises(SystemExit) as exc_info:
        build_parser().parse_args(['--version'])
    assert exc_info.value.code == 0
    assert __version__ in capsys.readouterr().out
