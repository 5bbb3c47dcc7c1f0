import pytest

from app.epinet_config import EpinetConfig, SolverSettings
from app.model_params import ModelParams
from app.runner import ScenarioRunner
from app.utility import make_utility

ENV_PATHS = ('EPINET_BASE_DIR', 'EPINET_LOG_DIR', 'EPINET_LOG_FILE', 'EPINET_OUTPUT_DIR')


@pytest.fixture
def params():
    """Base rates of the numerical study: β=0.1, δ=0.3, ρ=0.05, c0=0.1."""
    return ModelParams()


@pytest.fixture
def sqrt_utility():
    return make_utility('sqrt', c0=0.1)


@pytest.fixture
def strategic_utility():
    # u''' < 0 and W ≈ 54.8 > 10·a_c at the base rates
    return make_utility('cubic', {'epsilon': 1e-4, 'kappa': 1.0}, 0.1)


@pytest.fixture
def families():
    """One member of every shipped family, each with a peak well above 3."""
    return [
        make_utility('log', {'kappa': 1.0}, 0.1),
        make_utility('sqrt', {'kappa': 1.0}, 0.1),
        make_utility('exponential', {'kappa': 2.0, 'lam': 0.3}, 0.1),
        make_utility('cubic', {'epsilon': 0.001, 'kappa': 1.0}, 0.1),
    ]


@pytest.fixture
def coarse_settings():
    """Solver settings with a larger integrator step for long trajectories."""
    return SolverSettings(ode_max_step=1.0)


@pytest.fixture
def clean_env(monkeypatch):
    for name in ENV_PATHS:
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


@pytest.fixture
def runner(tmp_path, clean_env):
    config = EpinetConfig(base_dir=tmp_path, ode_max_step=1.0)
    return ScenarioRunner(config=config)
