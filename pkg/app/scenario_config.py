# Scenario Configuration


import copy
from dataclasses import dataclass, field, replace
import itertools
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from app.exceptions import ConfigurationError, ValidationError
from app.model_params import ModelParams, PopulationMix
from app.utility import UtilityFunction, make_utility

MODES = ('steady', 'ce', 'dynamics', 'protect', 'poa', 'hetero', 'abm', 'sweep', 'misdesign')
CELL_MODES = tuple(m for m in MODES if m != 'sweep')
SWEEP_AXES = ('a', 'delta', 'beta', 'rho', 'gamma', 'eta', 'theta0')
PARAM_KEYS = ('beta', 'delta', 'rho', 'c0')
PROTECT_MODES = ('fixed', 'strategic')
STRATEGIES = ('fixed', 'fixed-per-type', 'adaptive')
MATCHINGS = ('mean-field', 'random-partner')

# Scenario keys other than the nested ``params``, ``utility`` and ``mix`` blocks
SCALAR_KEYS = {
    'mode', 'a', 'gamma', 'eta', 'theta0', 'horizon', 'epsilon', 'protect_mode',
    'strategy', 'type_actions', 'n_agents', 'replicates', 'immunized_fraction',
    'matching', 'burn_in_fraction', 'sample_interval', 'seed', 'sweep_mode', 'axes', 'label',
}
TOP_LEVEL_KEYS = SCALAR_KEYS | {'params', 'utility', 'mix'}


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"'{key}' must be a number, got {value!r}")
    return float(value)


def _numbers(value: Any, key: str) -> Tuple[float, ...]:
    """Accept one number or a list of numbers."""
    if isinstance(value, (list, tuple)):
        return tuple(_number(v, key) for v in value)
    return (_number(value, key),)


def _integer(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"'{key}' must be an integer, got {value!r}")
    return value


def _choice(value: Any, key: str, options: Tuple[str, ...]) -> str:
    if value not in options:
        raise ConfigurationError(f"'{key}' must be one of {', '.join(options)}; got {value!r}")
    return value


def _block(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    block = data.get(key, {})
    if not isinstance(block, Mapping):
        raise ConfigurationError(f"'{key}' must be an object")
    data[key] = dict(block)
    return data[key]


def merge_overrides(data: Mapping[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Fold flat flag overrides into a scenario mapping; flags win over file values.

    Keys ``beta``, ``delta``, ``rho`` and ``c0`` go to the model parameters,
    ``utility``/``shape`` to the utility block and ``weights``/``deltas`` to
    the mix. ``None`` values are ignored.

    Raises:
        ConfigurationError: On an unknown override key.
    """
    merged = copy.deepcopy(dict(data))
    for key, value in overrides.items():
        if value is None:
            continue
        if key in PARAM_KEYS:
            _block(merged, 'params')[key] = value
        elif key in ('utility', 'shape'):
            if isinstance(merged.get('utility'), str):
                merged['utility'] = {'kind': merged['utility']}
            _block(merged, 'utility')['kind' if key == 'utility' else 'shape'] = value
        elif key in ('weights', 'deltas'):
            _block(merged, 'mix')[key] = value
        elif key in SCALAR_KEYS:
            merged[key] = value
        else:
            raise ConfigurationError(f"Unknown override: {key}")
    return merged


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Fully parsed description of one run of the scenario runner.

    Lists (``gamma``, ``eta``, ``theta0``) are evaluated inside a single
    cell; ``axes`` turns a ``sweep`` into a Cartesian grid of cells running
    ``sweep_mode``. In ``hetero`` sweeps the ``delta`` axis sets the curing
    rate of the last type.
    """

    mode: str = 'ce'
    params: ModelParams = field(default_factory=ModelParams)
    utility: str = 'sqrt'
    shape: Dict[str, float] = field(default_factory=dict)
    a: Optional[float] = None
    gamma: Tuple[float, ...] = ()
    eta: Tuple[float, ...] = ()
    theta0: Tuple[float, ...] = ()
    horizon: float = 200.0
    epsilon: Optional[float] = None
    protect_mode: str = 'fixed'
    strategy: str = 'adaptive'
    weights: Tuple[float, ...] = ()
    deltas: Tuple[float, ...] = ()
    type_actions: Tuple[float, ...] = ()
    n_agents: int = 10_000
    replicates: int = 10
    immunized_fraction: float = 0.0
    matching: str = 'mean-field'
    burn_in_fraction: float = 0.5
    sample_interval: float = 1.0
    seed: Optional[int] = None
    sweep_mode: Optional[str] = None
    axes: Dict[str, Tuple[float, ...]] = field(default_factory=dict)
    label: Optional[str] = None

    @staticmethod
    def from_dict(data: Mapping[str, Any]) -> 'ScenarioConfig':
        """
        Parse a scenario mapping (the JSON file layout).

        Raises:
            ConfigurationError: On unknown keys, wrong types or invalid values.
        """
        if not isinstance(data, Mapping):
            raise ConfigurationError("A scenario must be a JSON object")
        unknown = set(data) - TOP_LEVEL_KEYS
        if unknown:
            raise ConfigurationError(f"Unknown scenario keys: {sorted(unknown)}")
        values: Dict[str, Any] = {}

        params = data.get('params', {})
        if not isinstance(params, Mapping):
            raise ConfigurationError("'params' must be an object")
        try:
            values['params'] = ModelParams.from_dict({k: _number(v, k) for k, v in params.items()})
        except ValidationError as e:
            raise ConfigurationError(f"Invalid params: {e}") from e

        utility = data.get('utility', {})
        if isinstance(utility, str):
            utility = {'kind': utility}
        if not isinstance(utility, Mapping) or set(utility) - {'kind', 'shape'}:
            raise ConfigurationError("'utility' must be a family name or {kind, shape}")
        values['utility'] = str(utility.get('kind', 'sqrt'))
        shape = utility.get('shape', {})
        if not isinstance(shape, Mapping):
            raise ConfigurationError("'utility.shape' must be an object")
        values['shape'] = {str(k): _number(v, f"shape.{k}") for k, v in shape.items()}

        mix = data.get('mix')
        if mix is not None:
            if not isinstance(mix, Mapping) or set(mix) != {'weights', 'deltas'}:
                raise ConfigurationError("'mix' must be an object with weights and deltas")
            values['weights'] = _numbers(mix['weights'], 'mix.weights')
            values['deltas'] = _numbers(mix['deltas'], 'mix.deltas')

        for key in ('a', 'horizon', 'epsilon', 'immunized_fraction', 'burn_in_fraction',
                    'sample_interval'):
            if data.get(key) is not None:
                values[key] = _number(data[key], key)
        for key in ('gamma', 'eta', 'theta0', 'type_actions'):
            if data.get(key) is not None:
                values[key] = _numbers(data[key], key)
        for key in ('n_agents', 'replicates', 'seed'):
            if data.get(key) is not None:
                values[key] = _integer(data[key], key)
        if 'mode' in data:
            values['mode'] = _choice(data['mode'], 'mode', MODES)
        if data.get('sweep_mode') is not None:
            values['sweep_mode'] = _choice(data['sweep_mode'], 'sweep_mode', CELL_MODES)
        if 'protect_mode' in data:
            values['protect_mode'] = _choice(data['protect_mode'], 'protect_mode', PROTECT_MODES)
        if 'strategy' in data:
            values['strategy'] = _choice(data['strategy'], 'strategy', STRATEGIES)
        if 'matching' in data:
            values['matching'] = _choice(data['matching'], 'matching', MATCHINGS)
        if data.get('label') is not None:
            values['label'] = str(data['label'])

        axes = data.get('axes', {})
        if not isinstance(axes, Mapping):
            raise ConfigurationError("'axes' must map axis names to value lists")
        values['axes'] = {name: _numbers(grid, f"axes.{name}") for name, grid in axes.items()}

        scenario = ScenarioConfig(**values)
        scenario.validate()
        return scenario

    @staticmethod
    def load(path: Path, overrides: Optional[Mapping[str, Any]] = None) -> 'ScenarioConfig':
        """
        Read and parse a JSON scenario file, applying flag overrides first.

        Raises:
            ConfigurationError: If the file cannot be read or parsed.
        """
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Cannot read scenario file {path}: {e}") from e
        if not isinstance(data, Mapping):
            raise ConfigurationError(f"Scenario file {path} does not hold a JSON object")
        logging.info(f"Loaded scenario from {path}")
        return ScenarioConfig.from_dict(merge_overrides(data, overrides or {}))

    def to_dict(self) -> Dict[str, Any]:
        """Serialize to the JSON file layout; ``from_dict`` inverts it."""
        data: Dict[str, Any] = {
            'mode': self.mode,
            'params': self.params.to_dict(),
            'utility': {'kind': self.utility, 'shape': dict(self.shape)},
            'gamma': list(self.gamma),
            'eta': list(self.eta),
            'theta0': list(self.theta0),
            'horizon': self.horizon,
            'protect_mode': self.protect_mode,
            'strategy': self.strategy,
            'type_actions': list(self.type_actions),
            'n_agents': self.n_agents,
            'replicates': self.replicates,
            'immunized_fraction': self.immunized_fraction,
            'matching': self.matching,
            'burn_in_fraction': self.burn_in_fraction,
            'sample_interval': self.sample_interval,
            'axes': {name: list(grid) for name, grid in self.axes.items()},
        }
        for key in ('a', 'epsilon', 'seed', 'sweep_mode', 'label'):
            if getattr(self, key) is not None:
                data[key] = getattr(self, key)
        if self.weights:
            data['mix'] = {'weights': list(self.weights), 'deltas': list(self.deltas)}
        return data

    def with_overrides(self, overrides: Mapping[str, Any]) -> 'ScenarioConfig':
        """Apply flat flag overrides (see ``merge_overrides``) and re-validate."""
        data = self.to_dict()
        if overrides.get('weights') is not None or overrides.get('deltas') is not None:
            data.setdefault('mix', {'weights': list(self.weights), 'deltas': list(self.deltas)})
        return ScenarioConfig.from_dict(merge_overrides(data, overrides))

    @property
    def mix(self) -> Optional[PopulationMix]:
        """The heterogeneous population, when one is configured."""
        if not self.weights:
            return None
        return PopulationMix(weights=self.weights, deltas=self.deltas)

    def build_utility(self) -> UtilityFunction:
        """Validated utility; the link cost comes from the model parameters."""
        return make_utility(self.utility, self.shape, self.params.c0)

    def validate(self) -> None:
        """
        Check the mode-specific requirements.

        Raises:
            ConfigurationError: If a required field is missing or the sweep
                layout is unsupported.
        """
        if self.mode == 'sweep':
            if self.sweep_mode is None or self.sweep_mode == 'sweep':
                raise ConfigurationError("A sweep needs a sweep_mode other than 'sweep'")
            if not 1 <= len(self.axes) <= 2:
                raise ConfigurationError(f"A sweep takes one or two axes, got {len(self.axes)}")
            for name, grid in self.axes.items():
                if name not in SWEEP_AXES:
                    raise ConfigurationError(f"Unknown sweep axis '{name}'; use {', '.join(SWEEP_AXES)}")
                if not grid:
                    raise ConfigurationError(f"Sweep axis '{name}' has no values")
            return
        if self.axes:
            raise ConfigurationError("'axes' is only valid in sweep mode")
        if len(self.weights) != len(self.deltas):
            raise ConfigurationError("mix.weights and mix.deltas differ in length")
        missing = self._missing_fields()
        if missing:
            raise ConfigurationError(f"Mode '{self.mode}' needs: {', '.join(missing)}")
        if self.replicates < 2:
            raise ConfigurationError("replicates must be at least 2")

    def _missing_fields(self) -> List[str]:
        missing = []
        needs_action = (
            self.mode == 'steady'
            or (self.mode == 'protect' and self.protect_mode == 'fixed')
            or (self.mode in ('dynamics', 'abm') and self.strategy == 'fixed')
        )
        if needs_action and self.a is None:
            missing.append('a')
        if self.mode in ('protect', 'misdesign') and not self.gamma:
            missing.append('gamma')
        if self.mode == 'dynamics' and not self.theta0:
            missing.append('theta0')
        if self.mode == 'dynamics' and self.strategy == 'fixed-per-type':
            missing.append('strategy fixed or adaptive')
        if self.mode == 'hetero' and not self.weights:
            missing.append('mix')
        if self.mode == 'abm' and self.strategy == 'fixed-per-type' and not self.type_actions:
            missing.append('type_actions')
        return missing

    def cells(self) -> List[Tuple[Dict[str, float], 'ScenarioConfig']]:
        """
        Expand into (axis values, cell scenario) pairs in deterministic order.

        Each cell is validated before any computation starts. A non-sweep
        scenario is a single cell with no axis values.
        """
        if self.mode != 'sweep':
            return [({}, self)]
        names = list(self.axes)
        expanded = []
        for combo in itertools.product(*(self.axes[name] for name in names)):
            point = dict(zip(names, combo))
            cell = self._at(point)
            cell.validate()
            expanded.append((point, cell))
        return expanded

    def _at(self, point: Mapping[str, float]) -> 'ScenarioConfig':
        mode = self.sweep_mode
        changes: Dict[str, Any] = {'mode': mode, 'sweep_mode': None, 'axes': {}}
        params = self.params
        for name, value in point.items():
            if name in ('beta', 'rho'):
                params = params.with_values(**{name: value})
            elif name == 'delta':
                if mode == 'hetero' and self.deltas:
                    changes['deltas'] = self.deltas[:-1] + (value,)
                else:
                    params = params.with_values(delta=value)
            elif name == 'a':
                changes['a'] = value
            else:
                changes[name] = (value,)
        changes['params'] = params
        return replace(self, **changes)
