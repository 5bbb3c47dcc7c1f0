import pytest

from app.exceptions import ConfigurationError
from app.scenarios import BASE_PARAMS, scenario_configs, scenario_names


def test_scenario_names():
    assert scenario_names() == [f"fig{i}" for i in range(1, 9)]


@pytest.mark.parametrize("name", [f"fig{i}" for i in range(1, 9)])
def test_every_preset_parses_and_expands(name):
    parts = scenario_configs(name)
    assert parts
    for part in parts:
        assert part.label
        assert part.params.to_dict() == BASE_PARAMS
        assert part.cells()


def test_labels_are_unique_within_a_preset():
    for name in scenario_names():
        labels = [part.label for part in scenario_configs(name)]
        assert len(labels) == len(set(labels))


def test_threshold_preset_grid():
    _, threshold = scenario_configs('fig1')
    cells = threshold.cells()
    assert len(cells) == 101
    assert cells[30][0] == {'a': 3.0}


def test_strategic_presets_use_cubic_family():
    (cost,) = scenario_configs('fig4')
    assert cost.utility == 'cubic'
    assert cost.protect_mode == 'strategic'
    assert cost.build_utility().peak > 10 * cost.params.critical_action


def test_overrides_apply_to_every_part():
    parts = scenario_configs('fig2', {'utility': 'log', 'rho': 0.1})
    for part in parts:
        assert part.utility == 'log'
        assert part.params.rho == 0.1


def test_hetero_preset_mix():
    (hetero,) = scenario_configs('fig8')
    assert hetero.weights == (0.5, 0.5)
    assert [cell.deltas[-1] for _, cell in hetero.cells()][:2] == [0.1, 0.15]


def test_unknown_preset():
    with pytest.raises(ConfigurationError, match="Unknown scenario 'fig9'"):
        scenario_configs('fig9')
