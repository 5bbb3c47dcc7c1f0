import logging
from pathlib import Path

import pytest

from app.epinet_config import DEFAULT_SETTINGS, EpinetConfig, SolverSettings, get_project_root
from app.exceptions import ConfigurationError

ENV_VARS = (
    'EPINET_BASE_DIR', 'EPINET_LOG', 'EPINET_JOBS', 'EPINET_DEFAULT_SEED', 'EPINET_ROOT_TOL',
    'EPINET_MAX_BISECT_ITER', 'EPINET_ODE_ATOL', 'EPINET_ODE_RTOL', 'EPINET_ODE_MAX_STEP',
    'EPINET_STEADY_TOL', 'EPINET_ABM_REFRESH', 'EPINET_LOG_DIR', 'EPINET_LOG_FILE',
    'EPINET_OUTPUT_DIR',
)


@pytest.fixture(autouse=True)
def clear_env(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


def test_default_fallbacks():
    config = EpinetConfig()
    assert config.log_level == 'INFO'
    assert config.jobs == 1
    assert config.default_seed == 20240101
    assert config.root_tol == 1e-12
    assert config.max_bisect_iter == 200
    assert config.ode_max_step == 0.1
    assert config.abm_refresh == 1e-3
    config.validate()


def test_environment_overrides(clear_env):
    clear_env.setenv('EPINET_JOBS', '4')
    clear_env.setenv('EPINET_LOG', 'debug')
    clear_env.setenv('EPINET_DEFAULT_SEED', '7')
    clear_env.setenv('EPINET_ODE_RTOL', '1e-6')
    config = EpinetConfig()
    assert config.jobs == 4
    assert config.log_level == 'DEBUG'
    assert config.numeric_log_level == logging.DEBUG
    assert config.default_seed == 7
    assert config.ode_rtol == 1e-6


def test_constructor_values_win_over_environment(clear_env):
    clear_env.setenv('EPINET_JOBS', '4')
    assert EpinetConfig(jobs=2).jobs == 2


def test_get_project_root():
    assert (get_project_root() / "app").exists()


def test_base_dir_from_environment(clear_env, tmp_path):
    clear_env.setenv('EPINET_BASE_DIR', str(tmp_path))
    assert EpinetConfig().base_dir == tmp_path.resolve()


def test_log_dir_property():
    config = EpinetConfig(base_dir=Path('/new_base_dir'))
    assert config.log_dir == Path('/new_base_dir/logs').resolve()


def test_log_file_property():
    config = EpinetConfig(base_dir=Path('/new_base_dir'))
    assert config.log_file == Path('/new_base_dir/logs/epinet.log').resolve()


def test_output_dir_property():
    config = EpinetConfig(base_dir=Path('/new_base_dir'))
    assert config.output_dir == Path('/new_base_dir/output').resolve()


def test_path_environment_overrides(clear_env):
    clear_env.setenv('EPINET_LOG_FILE', '/tmp/elsewhere/run.log')
    clear_env.setenv('EPINET_OUTPUT_DIR', '/tmp/results')
    config = EpinetConfig(base_dir=Path('/new_base_dir'))
    assert config.log_file == Path('/tmp/elsewhere/run.log').resolve()
    assert config.output_dir == Path('/tmp/results').resolve()


def test_solver_settings_bundle():
    settings = EpinetConfig(root_tol=1e-10, ode_max_step=0.5).solver_settings()
    assert settings == SolverSettings(root_tol=1e-10, ode_max_step=0.5)
    assert DEFAULT_SETTINGS == SolverSettings()


@pytest.mark.parametrize("kwargs, message", [
    ({'jobs': 0}, "jobs must be positive"),
    ({'max_bisect_iter': 0}, "max_bisect_iter must be positive"),
    ({'root_tol': 0.0}, "root_tol must be positive"),
    ({'ode_atol': -1e-9}, "ode_atol must be positive"),
    ({'abm_refresh': 0.0}, "abm_refresh must be positive"),
    ({'log_level': 'chatty'}, "Unknown log level: CHATTY"),
])
def test_invalid_config(kwargs, message):
    with pytest.raises(ConfigurationError, match=message):
        EpinetConfig(**kwargs).validate()
