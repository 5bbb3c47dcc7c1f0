import json
import math
from unittest.mock import patch

import numpy as np
import pytest
from scipy import stats

from app.abm import (
    AbmConfig,
    Matching,
    Strategy,
    estimate_stationary,
    export_run,
    run_replicates,
    simulate,
    simulate_discounted_utility,
    summarize_replicates,
    trajectory_comparison,
)
from app.epinet_config import DEFAULT_SETTINGS, SolverSettings
from app.equilibrium import best_response, integrate_best_response, long_term_utilities, solve_ce
from app.exceptions import ValidationError
from app.meanfield import hetero_stationary, integrate_fixed, stationary_theta_immunized
from app.model_params import PopulationMix


def _fixed(**changes):
    settings = {'n_agents': 1000, 'action': 6.0, 'theta0': 0.1, 'horizon': 50.0, 'seed': 42}
    settings.update(changes)
    return AbmConfig(**settings)


def test_same_seed_same_trace():
    first = simulate(_fixed())
    second = simulate(_fixed())
    assert np.array_equal(first.thetas, second.thetas)
    assert first.infections == second.infections
    assert first.curings == second.curings


def test_different_seed_differs():
    assert not np.array_equal(simulate(_fixed(seed=1)).thetas, simulate(_fixed(seed=2)).thetas)


def test_trace_bookkeeping():
    trace = simulate(_fixed())
    assert trace.initial_infected == 100
    assert trace.final_infected == 100 + trace.infections - trace.curings
    assert trace.thetas[0] == pytest.approx(0.1)
    assert len(trace.times) == 51
    assert np.all((trace.thetas >= 0.0) & (trace.thetas <= 1.0))
    assert trace.hazard_drift < 1e-8
    assert not trace.extinct


def test_hazard_bookkeeping_over_long_run():
    trace = simulate(_fixed(n_agents=2000, horizon=100.0))
    assert trace.infections + trace.curings > 20_000
    assert trace.hazard_drift < 1e-8


def test_subcritical_run_goes_extinct():
    trace = simulate(_fixed(n_agents=200, action=2.0, theta0=0.05, horizon=200.0))
    assert trace.extinct
    assert trace.final_infected == 0
    assert trace.thetas[-1] == 0.0
    assert trace.quasi_stationary_mean(150.0) == 0.0


def test_no_initial_infection_is_extinct_at_start():
    trace = simulate(_fixed(theta0=0.0))
    assert trace.extinction_time == 0.0
    assert trace.infections == 0


@pytest.mark.parametrize("changes, message", [
    ({'n_agents': 50}, "n_agents"),
    ({'n_agents': 1000.0}, "n_agents"),
    ({'seed': -1}, "seed"),
    ({'theta0': 0.9, 'immunized_fraction': 0.2}, "exceeds the susceptible fraction"),
    ({'sample_interval': 100.0}, "sample_interval"),
    ({'strategy': 'adaptive'}, "needs a utility"),
    ({'horizon': 0.0}, "horizon"),
])
def test_config_validation(changes, message):
    with pytest.raises(ValidationError, match=message):
        _fixed(**changes)


def test_config_rejects_unknown_strategy():
    with pytest.raises(ValueError):
        _fixed(strategy='greedy')


def test_config_to_dict():
    data = _fixed(strategy=Strategy.FIXED, matching='random-partner').to_dict()
    assert data['strategy'] == 'fixed'
    assert data['matching'] == 'random-partner'
    assert data['utility'] is None
    assert data['params'] == {'beta': 0.1, 'delta': 0.3, 'rho': 0.05, 'c0': 0.1}


def test_replicates_are_independent_and_ordered():
    config = _fixed(n_agents=500, horizon=20.0)
    traces = run_replicates(config, 3)
    assert len(traces) == 3
    assert not np.array_equal(traces[0].thetas, traces[1].thetas)
    again = run_replicates(config, 3)
    for first, second in zip(traces, again):
        assert np.array_equal(first.thetas, second.thetas)


def test_parallel_replicates_match_serial():
    config = _fixed(n_agents=500, horizon=20.0)
    serial = run_replicates(config, 4, jobs=1)
    parallel = run_replicates(config, 4, jobs=2)
    for first, second in zip(serial, parallel):
        assert np.array_equal(first.thetas, second.thetas)


def test_estimate_needs_two_replicates():
    with pytest.raises(ValidationError, match="at least 2"):
        estimate_stationary(_fixed(), n_replicates=1)


def test_summary_rejects_full_burn_in():
    traces = run_replicates(_fixed(n_agents=200, horizon=10.0), 2)
    with pytest.raises(ValidationError, match="burn-in"):
        summarize_replicates(traces, 10.0, burn_in_fraction=1.0)


def test_summary_counts_extinctions():
    traces = run_replicates(_fixed(n_agents=200, action=2.0, theta0=0.05, horizon=200.0), 3)
    estimate = summarize_replicates(traces, 200.0)
    assert estimate.extinctions == 3
    assert estimate.mean == 0.0
    assert estimate.to_dict()['extinctions'] == 3


@pytest.mark.slow
def test_fixed_action_stationary_level():
    config = _fixed(n_agents=10_000, horizon=100.0, theta0=0.5)
    estimate = estimate_stationary(config, n_replicates=10, confidence=0.999)
    assert estimate.covers(0.5)
    assert abs(estimate.mean - 0.5) < 0.02
    assert estimate.extinctions == 0


@pytest.mark.slow
def test_adaptive_stationary_level(params, sqrt_utility):
    theta_ce = solve_ce(sqrt_utility, params).theta
    config = AbmConfig(
        n_agents=10_000, strategy='adaptive', utility=sqrt_utility, theta0=0.4,
        horizon=80.0, seed=7,
    )
    estimate = estimate_stationary(config, n_replicates=8, confidence=0.999)
    assert estimate.covers(theta_ce)
    assert abs(estimate.mean - theta_ce) < 0.02


def test_adaptive_run_records_actions(sqrt_utility):
    config = AbmConfig(
        n_agents=300, strategy='adaptive', utility=sqrt_utility, theta0=0.4,
        horizon=10.0, seed=3,
    )
    trace = simulate(config)
    assert trace.actions is not None
    assert np.all(trace.actions > 3.0)
    assert np.all(trace.actions < 25.0)
    assert 'action' in trace.to_frame().columns


@pytest.mark.slow
def test_ensemble_mean_tracks_ode(params):
    config = _fixed(n_agents=10_000, horizon=30.0, theta0=0.1)
    ode = integrate_fixed(0.1, 6.0, params, horizon=30.0)
    report = trajectory_comparison(config, ode, n_replicates=20)
    assert report.sup_norm < 0.03
    assert report.n_replicates == 20
    assert list(report.to_frame().columns) == ['time', 'abm_mean', 'ode']


@pytest.mark.slow
def test_deviation_from_ode_shrinks_with_population(params):
    ode = integrate_fixed(0.9, 6.0, params, horizon=30.0)
    small = trajectory_comparison(_fixed(n_agents=1000, theta0=0.9, horizon=30.0), ode, n_replicates=20)
    large = trajectory_comparison(_fixed(n_agents=10_000, theta0=0.9, horizon=30.0), ode, n_replicates=20)
    assert (small.n_agents, large.n_agents) == (1000, 10_000)
    assert large.mean_abs < small.mean_abs
    assert large.sup_norm < 0.03


@pytest.mark.slow
def test_adaptive_rise_from_low_infection_tracks_ode(params, sqrt_utility):
    theta_ce = solve_ce(sqrt_utility, params).theta
    ode = integrate_best_response(0.01, sqrt_utility, params, horizon=40.0)
    config = AbmConfig(
        n_agents=10_000, strategy='adaptive', utility=sqrt_utility, theta0=0.01,
        horizon=40.0, seed=11,
    )
    report = trajectory_comparison(config, ode, n_replicates=10)
    assert report.abm_mean[-1] > report.abm_mean[0] + 0.3
    assert report.abm_mean[-1] == pytest.approx(theta_ce, abs=0.02)
    assert report.sup_norm < 0.08


@pytest.mark.slow
def test_immunization_at_the_extinction_boundary(params):
    # η·a = 0.67·4.47 sits just below δ/β = 3
    assert 0.67 * 4.47 < params.critical_action
    boundary = estimate_stationary(
        _fixed(n_agents=5000, action=4.47, immunized_fraction=0.33, theta0=0.05, horizon=200.0),
        n_replicates=6,
    )
    assert stationary_theta_immunized(4.47, 0.67, params).theta == 0.0
    assert boundary.mean < 0.03
    supercritical = estimate_stationary(
        _fixed(n_agents=5000, action=4.47, immunized_fraction=0.2, theta0=0.05, horizon=200.0),
        n_replicates=6,
    )
    expected = stationary_theta_immunized(4.47, 0.8, params).theta
    assert expected == pytest.approx(0.8 - 3.0 / 4.47)
    assert supercritical.mean == pytest.approx(expected, abs=0.02)
    assert boundary.mean < 0.25 * supercritical.mean


def test_adaptive_best_responses_use_configured_settings(sqrt_utility):
    settings = SolverSettings(root_tol=1e-10, max_bisect_iter=150)
    config = AbmConfig(
        n_agents=300, strategy='adaptive', utility=sqrt_utility, theta0=0.4,
        horizon=5.0, seed=3, settings=settings,
    )
    with patch('app.abm.best_response', wraps=best_response) as best_response_mock:
        simulate(config)
    assert best_response_mock.call_count > 0
    assert all(call.kwargs['settings'] is settings for call in best_response_mock.call_args_list)


def test_default_config_uses_default_settings():
    assert _fixed().settings is DEFAULT_SETTINGS


def test_trajectory_comparison_checks_inputs(params):
    config = _fixed(theta0=0.1)
    with pytest.raises(ValidationError, match="ODE starts"):
        trajectory_comparison(config, integrate_fixed(0.2, 6.0, params, horizon=50.0))
    with pytest.raises(ValidationError, match="ends before"):
        trajectory_comparison(config, integrate_fixed(0.1, 6.0, params, horizon=10.0))
    with pytest.raises(ValidationError, match="at least 2"):
        trajectory_comparison(config, integrate_fixed(0.1, 6.0, params, horizon=50.0), n_replicates=1)


def test_random_partner_matching():
    trace = simulate(_fixed(n_agents=2000, theta0=0.5, horizon=60.0, matching=Matching.RANDOM_PARTNER))
    assert trace.contacts > trace.infections > 0
    assert trace.quasi_stationary_mean(20.0) == pytest.approx(0.5, abs=0.04)


def test_immunized_population_level():
    trace = simulate(_fixed(n_agents=5000, theta0=0.3, horizon=80.0, immunized_fraction=0.2))
    assert trace.quasi_stationary_mean(30.0) == pytest.approx(0.3, abs=0.03)
    assert np.all(trace.thetas <= 0.8)


def test_per_type_levels_match_mean_field(params):
    mix = PopulationMix(weights=(0.5, 0.5), deltas=(0.2, 0.4))
    config = AbmConfig(
        n_agents=6000, strategy='fixed-per-type', type_actions=(6.0, 6.0), mix=mix,
        theta0=0.4, horizon=80.0, seed=9,
    )
    trace = simulate(config)
    expected = hetero_stationary(mix, [6.0, 6.0], params)
    keep = trace.times >= 30.0
    observed = trace.type_thetas[keep].mean(axis=0)
    assert observed[0] == pytest.approx(expected.per_type_theta[0], abs=0.03)
    assert observed[1] == pytest.approx(expected.per_type_theta[1], abs=0.03)
    assert list(trace.to_frame().columns) == ['time', 'theta', 'theta_1', 'theta_2']


def test_curing_durations_are_exponential():
    config = _fixed(n_agents=1000, theta0=0.5, horizon=200.0, record_durations=True)
    trace = simulate(config)
    durations = trace.curing_durations(started_before=config.horizon - 20.0 / 0.3)
    assert len(durations) > 5000
    result = stats.kstest(durations, 'expon', args=(0, 1.0 / 0.3))
    assert result.pvalue > 1e-3


@pytest.mark.slow
@pytest.mark.parametrize("a, theta", [
    (2.0, 0.2), (2.0, 0.5), (4.0, 0.2), (4.0, 0.5), (6.0, 0.2),
    (6.0, 0.5), (8.0, 0.2), (8.0, 0.5), (10.0, 0.2), (10.0, 0.5),
])
def test_discounted_utility_matches_closed_form(params, sqrt_utility, a, theta):
    mean, std_error = simulate_discounted_utility(a, theta, sqrt_utility, params, n_runs=100_000, seed=17)
    expected = long_term_utilities(a, theta, sqrt_utility, params).healthy
    assert abs(mean - expected) < 4.0 * std_error


def test_discounted_utility_starting_infected(params, sqrt_utility):
    mean, std_error = simulate_discounted_utility(
        6.0, 0.4, sqrt_utility, params, n_runs=20_000, seed=5, start_infected=True)
    expected = long_term_utilities(6.0, 0.4, sqrt_utility, params).infected
    assert abs(mean - expected) < 4.0 * std_error


def test_discounted_utility_without_infection(params, sqrt_utility):
    mean, _ = simulate_discounted_utility(4.0, 0.0, sqrt_utility, params, n_runs=100, seed=1)
    assert mean == pytest.approx(float(sqrt_utility.value(4.0)) / params.rho, rel=1e-9)


def test_export_run(tmp_path):
    config = _fixed(n_agents=200, horizon=10.0)
    traces = run_replicates(config, 2)
    estimate = summarize_replicates(traces, config.horizon)
    written = export_run(tmp_path / 'abm', config, traces[0], estimate)
    assert written['trace'].exists()
    with open(written['summary'], encoding='utf-8') as f:
        summary = json.load(f)
    assert summary['seed'] == 42
    assert summary['config']['n_agents'] == 200
    assert summary['estimate']['values'] == list(estimate.values)
    assert math.isclose(summary['estimate']['mean'], estimate.mean)
