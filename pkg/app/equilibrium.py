# Strategic Equilibrium


from dataclasses import dataclass, field
import logging
import math
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.epinet_config import DEFAULT_SETTINGS, SolverSettings
from app.exceptions import (
    ConvergenceError,
    PreconditionError,
    TrivialRegimeError,
    ValidationError,
)
from app.input_validators import InputValidator
from app.meanfield import TrajectoryTrace, integrate_drift, per_type_theta
from app.model_params import ModelParams, PopulationMix
from app.roots import solve_bracketed
from app.utility import UtilityFunction

# Upper bracket end as a fraction of W; u/u' blows up at W itself
PEAK_GUARD = 1.0 - 1e-9


@dataclass(frozen=True)
class LongTermUtility:
    """
    Discounted long-term utilities of a constant strategy.

    Attributes:
        healthy: U_H, starting in the healthy state.
        infected: U_I, starting in the infected state.
        hazard: Infection hazard βθa faced while healthy.
    """

    healthy: float
    infected: float
    hazard: float


@dataclass(frozen=True)
class BestResponse:
    """
    Best-response action against a conjectured infected fraction.

    Attributes:
        action: The maximiser a*(θ) of U_H.
        capped: True when the action was capped at the peak W.
        residual: |u(a)/u'(a) - a - (ρ+δ)/(βθ)| at the returned action (0 when capped).
    """

    action: float
    capped: bool
    residual: float = 0.0


@dataclass(frozen=True)
class EquilibriumResult:
    """
    Conjectural equilibrium of the link formation game.

    Attributes:
        action: Equilibrium links a^CE (population mean Σ w_k a_k for types).
        theta: Stationary infected fraction θ^CE.
        residual: Absolute residual of the defining equation(s).
        bracket: Interval the outer solver started from.
        eta: Susceptible fraction the equilibrium was computed for.
        extinct: True when the infection dies out (immunized, finite-W regime).
        type_actions: Per-type equilibrium actions a_k^CE.
        type_thetas: Per-type infected fractions θ_k.
    """

    action: float
    theta: float
    residual: float
    bracket: Tuple[float, float]
    eta: float = 1.0
    extinct: bool = False
    type_actions: Tuple[float, ...] = ()
    type_thetas: Tuple[float, ...] = ()

    def to_dict(self) -> Dict[str, object]:
        return {
            'action': self.action,
            'theta': self.theta,
            'residual': self.residual,
            'bracket': list(self.bracket),
            'eta': self.eta,
            'extinct': self.extinct,
            'type_actions': list(self.type_actions),
            'type_thetas': list(self.type_thetas),
        }


@dataclass(frozen=True)
class ConvergenceBounds:
    """
    Analytic bounds on the time best-response dynamics need to reach θ^ε.

    Attributes:
        lower: Lower bound on the crossing time.
        upper: Upper bound on the crossing time.
        target_theta: θ^ε = θ^CE ± ε.
        theta_ce: Equilibrium infected fraction.
    """

    lower: float
    upper: float
    target_theta: float
    theta_ce: float


@dataclass
class ComparativeStatics:
    """
    Equilibrium action tabulated over one-parameter perturbations.

    Attributes:
        table: Rows of ``parameter``, ``value``, ``a_ce``, ``theta_ce``.
        monotone: Per parameter, whether a^CE moves strictly in the predicted direction.
    """

    table: pd.DataFrame
    monotone: Dict[str, bool] = field(default_factory=dict)

    # a^CE rises with ρ and δ and falls with β
    EXPECTED_DIRECTION = {'rho': 1, 'delta': 1, 'beta': -1}

    @property
    def all_monotone(self) -> bool:
        return all(self.monotone.values())


def long_term_utilities(
    a: float, theta: float, u: UtilityFunction, params: ModelParams
) -> LongTermUtility:
    """
    Closed-form U_H and U_I of holding ``a`` links against infected fraction θ.

    U_H = ((ρ+δ)/ρ)·u(a)/(ρ + δ + βθa) and U_I = (δ/(ρ+δ))·U_H.
    """
    a = InputValidator.validate_nonnegative(a, "a")
    theta = InputValidator.validate_fraction(theta, "theta")
    rho, delta = params.rho, params.delta
    hazard = params.beta * theta * a
    healthy = (rho + delta) / rho * float(u.value(a)) / (rho + delta + hazard)
    return LongTermUtility(healthy=healthy, infected=delta / (rho + delta) * healthy, hazard=hazard)


def long_term_utility(a: float, theta: float, u: UtilityFunction, params: ModelParams) -> float:
    """
    Long-term utility U_H of a healthy agent holding ``a`` links.

    Args:
        a (float): Links formed.
        theta (float): Infected fraction of the population.
        u (UtilityFunction): Instantaneous utility.
        params (ModelParams): Model rates.

    Returns:
        float: U_H; equals u(a)/ρ when θ = 0.
    """
    return long_term_utilities(a, theta, u, params).healthy


def ratio_slope(u: UtilityFunction, a: float) -> float:
    """Derivative of u/u' - a, which is -u·u''/u'² and positive on (0, W)."""
    slope = float(u.derivative(a, 1))
    return -float(u.value(a)) * float(u.derivative(a, 2)) / slope ** 2


def best_response_residual(a: float, theta: float, u: UtilityFunction, params: ModelParams) -> float:
    """u(a)/u'(a) - a - (ρ+δ)/(βθ); increasing in a, zero at the best response."""
    return u.ratio(a) - a - (params.rho + params.delta) / (params.beta * theta)


def _warm_bracket(func, hint: float, lo: float, hi: float) -> Tuple[float, float]:
    """Narrow [lo, hi] around a previous root when the sign pattern allows it."""
    if not lo < hint < hi:
        return lo, hi
    width = 0.05 * hint
    if func(hint) < 0:
        candidate = min(hi, hint + width)
        return (hint, candidate) if func(candidate) > 0 else (hint, hi)
    candidate = max(lo, hint - width)
    return (candidate, hint) if func(candidate) < 0 else (lo, hint)


def best_response(
    theta: float,
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
    hint: Optional[float] = None,
) -> BestResponse:
    """
    Best-response link action against infected fraction θ.

    Solves u(a)/u'(a) - a = (ρ+δ)/(βθ) on (0, W). At θ = 0 utility increases
    all the way to the peak, so the action is capped at W and flagged.

    Args:
        theta (float): Conjectured infected fraction.
        u (UtilityFunction): Instantaneous utility.
        params (ModelParams): Model rates.
        settings (SolverSettings): Root-finder controls.
        hint (Optional[float]): Previous best response used to warm-start the bracket.

    Returns:
        BestResponse: a*(θ), the cap flag and the residual.
    """
    theta = InputValidator.validate_fraction(theta, "theta")
    peak = u.peak
    if theta == 0.0:
        return BestResponse(action=peak, capped=True)

    def residual(a):
        return best_response_residual(a, theta, u, params)

    upper = peak * PEAK_GUARD
    if residual(upper) <= 0.0:
        logging.debug(f"Best response at θ={theta:.3g} capped at W={peak:g}")
        return BestResponse(action=peak, capped=True)
    lo, hi = (0.0, upper) if hint is None else _warm_bracket(residual, hint, 0.0, upper)
    result = solve_bracketed(
        residual, lo, hi,
        fprime=lambda a: ratio_slope(u, a),
        settings=settings,
        name="best_response",
    )
    return BestResponse(action=result.root, capped=False, residual=result.residual)


def ce_residual(a: float, u: UtilityFunction, params: ModelParams, eta: float = 1.0) -> float:
    """
    u(a)/u'(a) - a - (ρ+δ)/(ηβ - δ/a), the equilibrium condition in the action.

    Equals -∞ at and below a = δ/(ηβ), where the conjectured θ would be non-positive.
    """
    denominator = eta * params.beta - params.delta / a if a > 0 else -1.0
    if denominator <= 0.0:
        return -math.inf
    return u.ratio(a) - a - (params.rho + params.delta) / denominator


def _ce_residual_slope(a: float, u: UtilityFunction, params: ModelParams, eta: float) -> float:
    denominator = eta * params.beta - params.delta / a
    return ratio_slope(u, a) + (params.rho + params.delta) * params.delta / (a * denominator) ** 2


def solve_ce_immunized(
    u: UtilityFunction,
    params: ModelParams,
    eta: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> EquilibriumResult:
    """
    Conjectural equilibrium when only a fraction η of agents is susceptible.

    Solves θ = η - δ/(βa*(θ)) through its action form on (δ/(ηβ), W). With
    ηβW ≤ δ the infection dies out for every best response, and the agents sit
    at the peak W.

    Args:
        u (UtilityFunction): Instantaneous utility.
        params (ModelParams): Model rates.
        eta (float): Susceptible fraction.
        settings (SolverSettings): Root-finder controls.

    Returns:
        EquilibriumResult: Equilibrium action and infected fraction.

    Raises:
        TrivialRegimeError: For η = 1 with W ≤ a_c.
        ConvergenceError: If the bracketed solve fails.
    """
    eta = InputValidator.validate_fraction(eta, "eta")
    peak = u.peak
    upper = peak * PEAK_GUARD
    if eta == 0.0:
        return EquilibriumResult(peak, 0.0, 0.0, (0.0, peak), eta=0.0, extinct=True)
    lower = params.critical_action / eta
    if lower >= upper:
        if eta == 1.0:
            raise TrivialRegimeError(
                f"W={peak:g} does not exceed a_c={params.critical_action:g}: "
                f"the epidemic always dies out and no endemic equilibrium exists"
            )
        logging.info(f"η={eta:g}: ηβW ≤ δ, immunization extinguishes the infection")
        return EquilibriumResult(peak, 0.0, 0.0, (lower, peak), eta=eta, extinct=True)

    result = solve_bracketed(
        lambda a: ce_residual(a, u, params, eta),
        lower, upper,
        fprime=lambda a: _ce_residual_slope(a, u, params, eta),
        settings=settings,
        name="solve_ce",
    )
    action = result.root
    theta = eta - params.critical_action / action
    logging.debug(f"CE at η={eta:g}: a={action:.10g}, θ={theta:.10g}, residual={result.residual:.3g}")
    return EquilibriumResult(action, theta, result.residual, (lower, upper), eta=eta)


def solve_ce(
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> EquilibriumResult:
    """
    Unique conjectural equilibrium of the homogeneous game.

    a^CE solves u(a)/u'(a) - a = (ρ+δ)/(β - δ/a) on (a_c, W), and
    θ^CE = 1 - δ/(βa^CE) > 0.

    Raises:
        TrivialRegimeError: If W ≤ a_c.
    """
    result = solve_ce_immunized(u, params, 1.0, settings)
    logging.info(
        f"CE for {u} under {params}: a={result.action:.6g}, θ={result.theta:.6g}, "
        f"residual={result.residual:.2g}"
    )
    return result


def comparative_statics(
    u: UtilityFunction,
    params: ModelParams,
    grid: Mapping[str, Sequence[float]],
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ComparativeStatics:
    """
    Tabulate a^CE along one-parameter perturbations of ρ, δ and β.

    Cells in the trivial regime (W ≤ a_c) are recorded as NaN and left out of
    the monotonicity verdict.

    Args:
        u (UtilityFunction): Instantaneous utility.
        params (ModelParams): Base rates.
        grid (Mapping[str, Sequence[float]]): Values per parameter name.
        settings (SolverSettings): Root-finder controls.

    Returns:
        ComparativeStatics: Table and per-parameter monotonicity verdicts.
    """
    unknown = set(grid) - set(ComparativeStatics.EXPECTED_DIRECTION)
    if unknown:
        raise ValidationError(f"Comparative statics supports rho, delta, beta; got {sorted(unknown)}")
    rows = []
    monotone = {}
    for name, values in grid.items():
        actions = []
        for value in sorted(values):
            try:
                result = solve_ce(u, params.with_values(**{name: value}), settings)
                a_ce, theta_ce = result.action, result.theta
            except TrivialRegimeError:
                a_ce, theta_ce = math.nan, math.nan
            rows.append({'parameter': name, 'value': value, 'a_ce': a_ce, 'theta_ce': theta_ce})
            if not math.isnan(a_ce):
                actions.append(a_ce)
        steps = np.diff(actions) * ComparativeStatics.EXPECTED_DIRECTION[name]
        monotone[name] = bool(np.all(steps > 0))
    return ComparativeStatics(table=pd.DataFrame(rows), monotone=monotone)


class _BestResponseTracker:
    """Best response re-solved at every drift evaluation, warm-started from the last one."""

    def __init__(self, u: UtilityFunction, params: ModelParams, settings: SolverSettings):
        self.u = u
        self.params = params
        self.settings = settings
        self.last: Optional[float] = None

    def __call__(self, theta: float) -> float:
        response = best_response(theta, self.u, self.params, self.settings, hint=self.last)
        self.last = response.action
        return response.action

    def drift(self, theta: float) -> float:
        """dθ/dt = -θδ + (1 - θ)βθa*(θ)."""
        return -self.params.delta * theta + (1.0 - theta) * self.params.beta * theta * self(theta)


def integrate_best_response(
    theta0: float,
    u: UtilityFunction,
    params: ModelParams,
    horizon: float = 200.0,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> TrajectoryTrace:
    """
    Integrate best-response dynamics dθ = -θδdt + (1 - θ)βθa*(θ)dt.

    Args:
        theta0 (float): Initial infected fraction in (0, 1].
        u (UtilityFunction): Instantaneous utility.
        params (ModelParams): Model rates.
        horizon (float): Final time.
        settings (SolverSettings): Integrator and root-finder controls.

    Returns:
        TrajectoryTrace: θᵗ with the action a*(θᵗ) at every recorded time.
        A start at θ = 0 yields a constant, degenerate trace.
    """
    theta0 = InputValidator.validate_fraction(theta0, "theta0")
    tracker = _BestResponseTracker(u, params, settings)
    times, thetas, _ = integrate_drift(
        tracker.drift, theta0, horizon, settings, "integrate_best_response"
    )
    actions = np.array([tracker(float(th)) for th in thetas])
    slope = tracker.drift(float(thetas[-1]))
    degenerate = theta0 == 0.0
    if degenerate:
        logging.warning("Best-response dynamics started at θ=0: no epidemic to analyze")
    trace = TrajectoryTrace(
        times=times,
        thetas=thetas,
        terminal_theta=float(thetas[-1]),
        terminal_slope=slope,
        converged=abs(slope) < settings.steady_tol,
        actions=actions,
        degenerate=degenerate,
    )
    logging.info(
        f"Best-response trace from θ0={theta0:g}: terminal θ={trace.terminal_theta:.6g} "
        f"(converged={trace.converged})"
    )
    return trace


def _log_rate(theta: float, u: UtilityFunction, params: ModelParams, settings: SolverSettings) -> float:
    """Growth rate of ln θ under best-response dynamics: (1 - θ)βa*(θ) - δ."""
    action = best_response(theta, u, params, settings).action
    return (1.0 - theta) * params.beta * action - params.delta


def _crossing_target(theta0: float, epsilon: float, theta_ce: float) -> float:
    if theta0 == theta_ce:
        raise PreconditionError("Convergence bounds are undefined when θ0 equals θ^CE")
    target = theta_ce + epsilon if theta0 > theta_ce else theta_ce - epsilon
    if not 0.0 < target < 1.0:
        raise ValidationError(f"ε={epsilon:g} puts θ^ε={target:g} outside (0, 1)")
    if (theta0 > theta_ce and theta0 <= target) or (theta0 < theta_ce and theta0 >= target):
        raise ValidationError(f"θ0={theta0:g} already lies within ε={epsilon:g} of θ^CE")
    return target


def convergence_time_bounds(
    theta0: float,
    epsilon: float,
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> ConvergenceBounds:
    """
    Bounds on the time T for best-response dynamics to come within ε of θ^CE.

    With r(θ) = (1 - θ)βa*(θ) - δ, |r| is largest at θ0 and smallest at θ^ε,
    so |ln θ0 - ln θ^ε|/|r(θ0)| < T < |ln θ0 - ln θ^ε|/|r(θ^ε)|.

    Raises:
        PreconditionError: If θ0 = θ^CE.
        ValidationError: If θ^ε leaves (0, 1) or θ0 is already within ε.
    """
    theta0 = InputValidator.validate_fraction(theta0, "theta0")
    epsilon = InputValidator.validate_positive(epsilon, "epsilon")
    ce = solve_ce(u, params, settings)
    target = _crossing_target(theta0, epsilon, ce.theta)
    distance = abs(math.log(theta0) - math.log(target))
    lower = distance / abs(_log_rate(theta0, u, params, settings))
    upper = distance / abs(_log_rate(target, u, params, settings))
    return ConvergenceBounds(lower=lower, upper=upper, target_theta=target, theta_ce=ce.theta)


def empirical_crossing_time(
    theta0: float,
    epsilon: float,
    u: UtilityFunction,
    params: ModelParams,
    horizon: float = 500.0,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """
    First time the best-response trajectory from θ0 reaches θ^ε, located by event detection.

    Raises:
        ConvergenceError: If θ^ε is not reached within the horizon.
    """
    theta0 = InputValidator.validate_fraction(theta0, "theta0")
    epsilon = InputValidator.validate_positive(epsilon, "epsilon")
    ce = solve_ce(u, params, settings)
    target = _crossing_target(theta0, epsilon, ce.theta)
    tracker = _BestResponseTracker(u, params, settings)
    _, _, crossed = integrate_drift(
        tracker.drift, theta0, horizon, settings, "empirical_crossing_time", stop_at=target
    )
    if crossed is None:
        raise ConvergenceError(f"θ^ε={target:g} not reached from θ0={theta0:g} within {horizon:g}")
    return crossed


def hetero_type_actions(
    theta: float,
    u: UtilityFunction,
    mix: PopulationMix,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> Tuple[BestResponse, ...]:
    """Per-type best responses a_k*(θ), each using its own curing rate δ_k."""
    return tuple(
        best_response(theta, u, params.with_values(delta=delta_k), settings)
        for delta_k in mix.deltas
    )


def hetero_balance(
    theta: float,
    u: UtilityFunction,
    mix: PopulationMix,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """g(θ) - 1 with g(θ) = Σ_k w_k x_k/(θx_k + 1), x_k = βa_k*(θ)/δ_k; decreasing in θ."""
    actions = np.array([r.action for r in hetero_type_actions(theta, u, mix, params, settings)])
    rates = params.beta * actions / np.asarray(mix.deltas)
    return float(np.sum(np.asarray(mix.weights) * rates / (theta * rates + 1.0))) - 1.0


def solve_hetero_ce(
    u: UtilityFunction,
    mix: PopulationMix,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> EquilibriumResult:
    """
    Unique conjectural equilibrium with K types differing in curing rate.

    Outer bisection on θ for g(θ) = 1, inner per-type best responses
    u(a_k)/u'(a_k) - a_k = (ρ+δ_k)/(βθ).

    Args:
        u (UtilityFunction): Instantaneous utility shared by all types.
        mix (PopulationMix): Type weights and curing rates.
        params (ModelParams): Rates; ``delta`` is replaced by each δ_k.
        settings (SolverSettings): Root-finder controls.

    Returns:
        EquilibriumResult: θ^CE, per-type actions and infected fractions; the
        ``action`` field holds the population mean Σ w_k a_k.

    Raises:
        TrivialRegimeError: When even agents at the peak W cannot sustain the
            infection (g(0) ≤ 1).
    """
    def balance(theta):
        return hetero_balance(theta, u, mix, params, settings)

    if balance(0.0) <= 0.0:
        raise TrivialRegimeError(
            f"βW·Σ w_k/δ_k ≤ 1 for W={u.peak:g}: the heterogeneous epidemic always dies out"
        )
    outer = solve_bracketed(balance, 0.0, 1.0, settings=settings, name="solve_hetero_ce")
    theta = outer.root
    responses = hetero_type_actions(theta, u, mix, params, settings)
    actions = tuple(r.action for r in responses)
    rates = params.beta * np.asarray(actions) / np.asarray(mix.deltas)
    residual = max([outer.residual] + [r.residual for r in responses])
    mean_action = math.fsum(w * a for w, a in zip(mix.weights, actions))
    logging.info(f"Heterogeneous CE: θ={theta:.6g}, actions={actions}, residual={residual:.2g}")
    return EquilibriumResult(
        action=mean_action,
        theta=theta,
        residual=residual,
        bracket=(0.0, 1.0),
        type_actions=actions,
        type_thetas=per_type_theta(theta, rates),
    )
