import math

import numpy as np
import pytest

from app.exceptions import ValidationError
from app.utility import (
    CubicBenefit,
    ExponentialBenefit,
    LinearBenefit,
    LogBenefit,
    SqrtBenefit,
    UtilityFactory,
    UtilityFunction,
    make_utility,
    peak_action,
    validate_utility,
)


@pytest.mark.parametrize("kind, shape, expected", [
    ('log', {'kappa': 1.0}, 9.0),
    ('sqrt', {'kappa': 1.0}, 25.0),
    ('exponential', {'kappa': 1.0, 'lam': 0.5}, math.log(5.0) / 0.5),
    ('cubic', {'epsilon': 0.001, 'kappa': 1.0}, math.sqrt(0.9 / 0.003)),
    ('cubic', {'epsilon': 1e-4, 'kappa': 1.0}, math.sqrt(0.9 / 3e-4)),
])
def test_peak_action_closed_forms(kind, shape, expected):
    u = make_utility(kind, shape, 0.1)
    assert peak_action(u) == pytest.approx(expected, rel=1e-12)
    assert float(u.derivative(u.peak)) == pytest.approx(0.0, abs=1e-12)


def test_sqrt_peak_value():
    assert make_utility('sqrt', c0=0.1).peak == pytest.approx(25.0)


def test_cubic_domain_max():
    u = make_utility('cubic', {'epsilon': 0.001}, 0.1)
    assert u.domain_max == pytest.approx(18.257, abs=1e-3)
    assert u.peak < u.domain_max


def _random_member(rng, kind):
    if kind in ('log', 'sqrt'):
        shape = {'kappa': rng.uniform(0.5, 3.0)}
    elif kind == 'exponential':
        shape = {'kappa': rng.uniform(1.0, 3.0), 'lam': rng.uniform(0.2, 1.0)}
    else:
        shape = {'epsilon': rng.uniform(1e-4, 1e-2), 'kappa': rng.uniform(0.5, 2.0)}
    return make_utility(kind, shape, 0.1)


def _support(u):
    """Finite sampling window [0, upper] covering the peak."""
    return min(u.domain_max, 10.0 * u.peak)


@pytest.mark.parametrize("kind", ['log', 'sqrt', 'exponential', 'cubic'])
def test_analytic_derivatives_match_finite_differences(kind):
    rng = np.random.default_rng(2024)
    h = 1e-4
    for _ in range(20):
        u = _random_member(rng, kind)
        upper = min(2.0 * u.peak, 0.9 * u.domain_max)
        for x in rng.uniform(0.5, upper, 100):
            assert float(u.derivative(x, 1)) == pytest.approx(
                (float(u.value(x + h)) - float(u.value(x - h))) / (2 * h), rel=1e-6, abs=1e-7)
            assert float(u.derivative(x, 2)) == pytest.approx(
                (float(u.derivative(x + h, 1)) - float(u.derivative(x - h, 1))) / (2 * h), rel=1e-5, abs=1e-7)
            assert float(u.derivative(x, 3)) == pytest.approx(
                (float(u.derivative(x + h, 2)) - float(u.derivative(x - h, 2))) / (2 * h), rel=1e-4, abs=1e-7)


@pytest.mark.parametrize("kind", ['log', 'sqrt', 'exponential', 'cubic'])
def test_peak_dominates_the_domain(kind):
    rng = np.random.default_rng(7)
    for _ in range(20):
        u = _random_member(rng, kind)
        xs = rng.uniform(0.0, _support(u), 1000)
        best = float(u.value(u.peak))
        assert np.all(best >= u.value(xs) - 1e-12 * max(1.0, abs(best)))
        assert float(u.derivative(u.peak)) == pytest.approx(0.0, abs=1e-10)


def test_ratio_increases_up_to_the_peak(families):
    for u in families:
        xs = np.geomspace(1e-3, 0.999 * u.peak, 500)
        ratios = np.array([u.ratio(float(x)) for x in xs])
        assert np.all(np.isfinite(ratios))
        assert np.all(np.diff(ratios) > 0.0)


def test_value_is_benefit_minus_cost():
    u = SqrtBenefit(kappa=1.0, c0=0.1)
    assert float(u.value(4.0)) == pytest.approx(2.0 - 0.4)


def test_value_accepts_arrays():
    u = LogBenefit(kappa=1.0, c0=0.1)
    values = u.value(np.array([0.0, 1.0, 2.0]))
    assert values.shape == (3,)
    assert values[0] == 0.0


def test_derivative_order_out_of_range():
    with pytest.raises(ValidationError, match="order must be 1, 2 or 3"):
        SqrtBenefit().derivative(1.0, order=4)


def test_ratio_guards():
    u = SqrtBenefit(kappa=1.0, c0=0.1)
    assert u.ratio(0.0) == 0.0
    assert u.ratio(30.0) == math.inf
    assert u.ratio(4.0) == pytest.approx(1.6 / 0.15)


def test_scaled_keeps_peak():
    u = make_utility('log', {'kappa': 1.0}, 0.1)
    scaled = u.scaled(3.0)
    assert scaled.kappa == pytest.approx(3.0)
    assert scaled.c0 == pytest.approx(0.3)
    assert scaled.peak == pytest.approx(u.peak)
    assert float(scaled.value(2.0)) == pytest.approx(3.0 * float(u.value(2.0)))


def test_scaled_rejects_nonpositive_factor():
    with pytest.raises(ValidationError):
        SqrtBenefit().scaled(0.0)


def test_to_dict_and_str():
    u = ExponentialBenefit(kappa=2.0, lam=0.3, c0=0.1)
    assert u.to_dict() == {'kind': 'exponential', 'shape': {'kappa': 2.0, 'lam': 0.3}, 'c0': 0.1}
    assert str(u) == "exponential(kappa=2, lam=0.3, c0=0.1)"


def test_validate_utility_passes_shipped_families(families):
    for u in families:
        report = validate_utility(u)
        assert report.passed, report.failures
        assert report.failures == []


def test_third_derivative_flag():
    assert validate_utility(CubicBenefit(epsilon=1e-4)).negative_third_derivative
    assert not validate_utility(SqrtBenefit()).negative_third_derivative
    assert not validate_utility(LogBenefit()).negative_third_derivative


def test_linear_fails_validation():
    report = validate_utility(LinearBenefit(kappa=1.0, c0=0.1))
    assert not report.passed
    assert "b''<0" in report.failures
    assert "peak" in report.failures
    assert report.to_dict()['peak'] is None


def test_make_utility_rejects_linear():
    with pytest.raises(ValidationError, match="violates model assumptions"):
        make_utility('linear', {'kappa': 1.0}, 0.1)


def test_make_utility_rejects_marginal_benefit_below_cost():
    with pytest.raises(ValidationError, match="b'\\(0\\)>c0"):
        make_utility('log', {'kappa': 0.05}, 0.1)


def test_factory_aliases_and_positional_shape():
    u = UtilityFactory.create('bounded-exponential', [2.0, 0.3], 0.1)
    assert isinstance(u, ExponentialBenefit)
    assert (u.kappa, u.lam) == (2.0, 0.3)
    assert isinstance(UtilityFactory.create('SQRT'), SqrtBenefit)


def test_factory_unknown_family():
    with pytest.raises(ValidationError, match="Unknown utility family: quartic"):
        UtilityFactory.create('quartic')


def test_factory_unknown_shape_parameter():
    with pytest.raises(ValidationError, match="Unknown shape parameters"):
        UtilityFactory.create('sqrt', {'lam': 1.0})


def test_factory_too_many_positional_shapes():
    with pytest.raises(ValidationError, match="at most 1"):
        UtilityFactory.create('sqrt', [1.0, 2.0])


def test_factory_rejects_negative_cost():
    with pytest.raises(ValidationError):
        UtilityFactory.create('sqrt', c0=-0.1)


def test_factory_lists_families():
    assert UtilityFactory.families() == ['cubic', 'exponential', 'linear', 'log', 'sqrt']


def test_register_family():
    from dataclasses import dataclass
    from typing import ClassVar

    @dataclass(frozen=True)
    class DoubledSqrt(SqrtBenefit):
        kind: ClassVar[str] = "doubled-sqrt"

        def benefit(self, x):
            return 2.0 * super().benefit(x)

        def benefit_derivative(self, x, order=1):
            return 2.0 * super().benefit_derivative(x, order)

        def _analytic_peak(self):
            return (self.kappa / self.c0) ** 2

    UtilityFactory.register_family('doubled-sqrt', DoubledSqrt)
    try:
        u = make_utility('doubled-sqrt', {'kappa': 1.0}, 0.1)
        assert u.peak == pytest.approx(100.0)
        assert float(u.derivative(u.peak)) == pytest.approx(0.0, abs=1e-12)
    finally:
        UtilityFactory._families.pop('doubled-sqrt')


def test_register_invalid_family():
    with pytest.raises(TypeError, match="must inherit from UtilityFunction"):
        UtilityFactory.register_family('bad', dict)


def test_peak_missing_raises():
    with pytest.raises(ValidationError, match="no finite peak"):
        LinearBenefit(kappa=1.0).peak


def test_abstract_base_cannot_be_instantiated():
    with pytest.raises(TypeError):
        UtilityFunction()
