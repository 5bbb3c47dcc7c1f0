import pytest

from app.exceptions import ValidationError
from app.model_params import ModelParams, PopulationMix


def test_default_rates():
    params = ModelParams()
    assert (params.beta, params.delta, params.rho, params.c0) == (0.1, 0.3, 0.05, 0.1)


def test_critical_action_is_decimal_exact():
    assert ModelParams(beta=0.1, delta=0.3).critical_action == 3.0


def test_critical_action_other_rates():
    assert ModelParams(beta=0.2, delta=0.5).critical_action == 2.5


def test_string_rates_are_converted():
    params = ModelParams(beta="0.2", delta=" 0.4 ")
    assert params.beta == 0.2
    assert params.delta == 0.4


@pytest.mark.parametrize("field_name, value", [
    ('beta', 0.0),
    ('beta', -0.1),
    ('delta', 0.0),
    ('rho', -1.0),
    ('c0', -0.01),
    ('beta', float('nan')),
    ('delta', float('inf')),
    ('rho', 'abc'),
])
def test_invalid_rates_rejected(field_name, value):
    with pytest.raises(ValidationError):
        ModelParams(**{field_name: value})


def test_zero_link_cost_allowed():
    assert ModelParams(c0=0.0).c0 == 0.0


def test_with_values_returns_validated_copy():
    params = ModelParams()
    changed = params.with_values(delta=0.4)
    assert changed.delta == 0.4
    assert params.delta == 0.3
    with pytest.raises(ValidationError):
        params.with_values(beta=-1.0)


def test_to_dict_from_dict():
    params = ModelParams(beta=0.2, delta=0.25, rho=0.1, c0=0.05)
    assert ModelParams.from_dict(params.to_dict()) == params


def test_from_dict_unknown_key():
    with pytest.raises(ValidationError, match="Unknown model parameters"):
        ModelParams.from_dict({'beta': 0.1, 'gamma': 0.5})


def test_str_lists_rates():
    assert str(ModelParams()) == "β=0.1, δ=0.3, ρ=0.05, c0=0.1"


def test_mix_homogeneous():
    mix = PopulationMix.homogeneous(0.3)
    assert mix.n_types == 1
    assert mix.weights == (1.0,)
    assert mix.deltas == (0.3,)


def test_mix_converts_lists_to_tuples():
    mix = PopulationMix(weights=[0.25, 0.75], deltas=[0.2, 0.4])
    assert mix.weights == (0.25, 0.75)
    assert mix.deltas == (0.2, 0.4)


def test_mix_weights_must_sum_to_one():
    with pytest.raises(ValidationError, match="sum to 1"):
        PopulationMix(weights=(0.5, 0.4), deltas=(0.2, 0.3))


def test_mix_length_mismatch():
    with pytest.raises(ValidationError, match="lengths differ"):
        PopulationMix(weights=(0.5, 0.5), deltas=(0.2,))


def test_mix_needs_a_type():
    with pytest.raises(ValidationError):
        PopulationMix(weights=(), deltas=())


def test_mix_rejects_nonpositive_delta():
    with pytest.raises(ValidationError):
        PopulationMix(weights=(0.5, 0.5), deltas=(0.2, 0.0))


def test_check_actions():
    mix = PopulationMix(weights=(0.5, 0.5), deltas=(0.2, 0.4))
    assert mix.check_actions([4, 6]) == (4.0, 6.0)
    with pytest.raises(ValidationError, match="Expected 2 actions"):
        mix.check_actions([4.0])
    with pytest.raises(ValidationError):
        mix.check_actions([4.0, -1.0])


def test_mix_dict_round_trip_and_bad_input():
    mix = PopulationMix(weights=(0.5, 0.5), deltas=(0.2, 0.4))
    assert PopulationMix.from_dict(mix.to_dict()) == mix
    with pytest.raises(ValidationError, match="Invalid population mix"):
        PopulationMix.from_dict({'weights': [1.0]})
