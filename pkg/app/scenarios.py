# Scenario Presets


from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from app.exceptions import ConfigurationError
from app.scenario_config import ScenarioConfig

# Base rates of the numerical study
BASE_PARAMS = {'beta': 0.1, 'delta': 0.3, 'rho': 0.05, 'c0': 0.1}
# Family with u''' < 0 and W > 10·a_c at the base rates
STRATEGIC_UTILITY = {'kind': 'cubic', 'shape': {'epsilon': 1e-4, 'kappa': 1.0}}


def _grid(start: float, stop: float, count: int) -> List[float]:
    return [round(float(x), 10) for x in np.linspace(start, stop, count)]


def _fig1() -> List[Dict[str, Any]]:
    return [
        {'label': 'dynamics', 'mode': 'dynamics', 'strategy': 'fixed', 'a': 6.0,
         'theta0': [0.1, 0.5, 0.9], 'horizon': 50.0},
        {'label': 'threshold', 'mode': 'sweep', 'sweep_mode': 'steady',
         'axes': {'a': _grid(0.0, 10.0, 101)}},
    ]


def _fig2() -> List[Dict[str, Any]]:
    return [
        {'label': 'dynamics', 'mode': 'sweep', 'sweep_mode': 'dynamics', 'strategy': 'adaptive',
         'theta0': [0.1, 0.9], 'horizon': 150.0, 'axes': {'delta': [0.2, 0.3, 0.4]}},
        {'label': 'equilibrium', 'mode': 'sweep', 'sweep_mode': 'ce',
         'axes': {'delta': _grid(0.1, 0.5, 9)}},
    ]


def _fig3() -> List[Dict[str, Any]]:
    return [
        {'label': 'cost', 'mode': 'protect', 'protect_mode': 'fixed', 'a': 4.47,
         'gamma': [0.3, 0.7, 1.5], 'eta': _grid(0.0, 1.0, 101)},
    ]


def _fig4() -> List[Dict[str, Any]]:
    return [
        {'label': 'cost', 'mode': 'protect', 'protect_mode': 'strategic',
         'utility': STRATEGIC_UTILITY, 'gamma': [0.5, 0.85, 1.2], 'eta': _grid(0.0, 1.0, 51)},
    ]


def _fig5() -> List[Dict[str, Any]]:
    return [
        {'label': 'misdesign', 'mode': 'misdesign', 'utility': STRATEGIC_UTILITY,
         'gamma': _grid(0.05, 1.5, 30)},
    ]


def _fig6() -> List[Dict[str, Any]]:
    return [
        {'label': 'efficiency', 'mode': 'sweep', 'sweep_mode': 'steady',
         'axes': {'a': _grid(0.1, 10.0, 100)}},
    ]


def _fig7() -> List[Dict[str, Any]]:
    return [
        {'label': 'poa', 'mode': 'sweep', 'sweep_mode': 'poa', 'axes': {'delta': _grid(0.1, 0.5, 9)}},
    ]


def _fig8() -> List[Dict[str, Any]]:
    return [
        {'label': 'hetero', 'mode': 'sweep', 'sweep_mode': 'hetero',
         'mix': {'weights': [0.5, 0.5], 'deltas': [0.2, 0.4]},
         'axes': {'delta': _grid(0.1, 0.5, 9)}},
    ]


PRESETS = {
    'fig1': _fig1,
    'fig2': _fig2,
    'fig3': _fig3,
    'fig4': _fig4,
    'fig5': _fig5,
    'fig6': _fig6,
    'fig7': _fig7,
    'fig8': _fig8,
}


def scenario_names() -> List[str]:
    """Names of the bundled presets."""
    return sorted(PRESETS)


def scenario_configs(name: str, overrides: Optional[Mapping[str, Any]] = None) -> List[ScenarioConfig]:
    """
    Parsed parts of a preset, each with the flag overrides applied.

    Args:
        name: Preset name, ``fig1`` to ``fig8``.
        overrides: Flat overrides such as ``{'utility': 'log'}``.

    Raises:
        ConfigurationError: If the preset is unknown.
    """
    builder = PRESETS.get(name)
    if builder is None:
        raise ConfigurationError(f"Unknown scenario '{name}'; choose from {', '.join(scenario_names())}")
    parts = []
    for part in builder():
        part.setdefault('params', dict(BASE_PARAMS))
        scenario = ScenarioConfig.from_dict(part)
        if overrides:
            scenario = scenario.with_overrides(overrides)
        parts.append(scenario)
    return parts
