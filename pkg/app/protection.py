# Optimal Protection


from dataclasses import dataclass
from enum import Enum
import logging
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.epinet_config import DEFAULT_SETTINGS, SolverSettings
from app.equilibrium import solve_ce, solve_ce_immunized
from app.exceptions import PreconditionError, ValidationError
from app.input_validators import InputValidator
from app.meanfield import stationary_theta_immunized
from app.model_params import ModelParams
from app.roots import solve_bracketed
from app.utility import UtilityFunction, validate_utility

# Finite-difference step for θ'(η)
DERIVATIVE_STEP = 1e-4
GRID_POINTS = 1001


class PolicyRegime(str, Enum):
    """
    Which immunization scheme is optimal.

    IMMUNIZE_ALL means immunizing down to the extinction point, not to
    η = 0: strategic agents get η* = η₀ = δ/(βW). Every η ≤ η₀ already
    gives θ = 0, so D = γ(1 - η) falls all the way up to η₀. The
    fixed-agent rule never selects it.
    """

    IMMUNIZE_NONE = "immunize-none"
    INTERIOR = "interior"
    IMMUNIZE_ALL = "immunize-all"


@dataclass(frozen=True)
class ProtectionPolicy:
    """
    Optimal immunization decision.

    Attributes:
        eta_star: Optimal susceptible fraction η*. In the strategic
            immunize-all regime this is η₀ = δ/(βW), not 0.
        regime: Regime the optimum falls in.
        total_cost: D = θ + γ(1 - η) at η*.
        gamma1: Lower immunization-cost threshold (strategic case).
        gamma2: Upper immunization-cost threshold (strategic case).
        trivial: True when no immunization is needed at all (a ≤ a_c).
    """

    eta_star: float
    regime: PolicyRegime
    total_cost: float
    gamma1: Optional[float] = None
    gamma2: Optional[float] = None
    trivial: bool = False

    @property
    def immunized_fraction(self) -> float:
        return 1.0 - self.eta_star

    def to_dict(self) -> Dict[str, object]:
        return {
            'eta_star': self.eta_star,
            'regime': self.regime.value,
            'total_cost': self.total_cost,
            'gamma1': self.gamma1,
            'gamma2': self.gamma2,
            'trivial': self.trivial,
        }


@dataclass
class MisdesignReport:
    """
    Cost of designing immunization for fixed agents when agents are strategic.

    Attributes:
        table: One row per γ with both policies, their costs and the ratio.
        crossover_gamma: γ at which both designs pick the same η.
        eta_fixed: Prop-2 level δ/(βa^CE) the fixed-agent design uses for γ ≤ 1.
    """

    table: pd.DataFrame
    crossover_gamma: float
    eta_fixed: float

    @property
    def ratios(self) -> np.ndarray:
        return self.table['ratio'].to_numpy()


def total_cost_fixed(a: float, eta: float, gamma: float, params: ModelParams) -> float:
    """
    Total system cost D(a, η) = θ(a, η) + γ(1 - η) for agents with fixed action ``a``.

    Args:
        a (float): Links per agent.
        eta (float): Susceptible fraction.
        gamma (float): Immunization cost per agent and unit time.
        params (ModelParams): Model rates.

    Returns:
        float: The total cost.
    """
    gamma = InputValidator.validate_nonnegative(gamma, "gamma")
    theta = stationary_theta_immunized(a, eta, params).theta
    return theta + gamma * (1.0 - eta)


def grid_search_eta(
    cost: Callable[[float], float], n_points: int = GRID_POINTS
) -> Tuple[float, float]:
    """
    Minimize a cost over an even η-grid on [0, 1]; ties go to the smaller η.

    Returns:
        (η, cost) at the grid minimum.
    """
    etas = np.linspace(0.0, 1.0, n_points)
    costs = np.array([cost(float(eta)) for eta in etas])
    best = int(np.argmin(costs))
    return float(etas[best]), float(costs[best])


def optimal_eta_fixed(a: float, gamma: float, params: ModelParams) -> ProtectionPolicy:
    """
    Optimal susceptible fraction when every agent forms ``a`` links.

    For γ ≤ 1 immunize down to η* = δ/(βa), whatever γ is; for γ > 1
    immunizing never pays and η* = 1. When a ≤ a_c the infection dies
    out without help and a trivial no-immunization policy is returned.

    Args:
        a (float): Links per agent.
        gamma (float): Immunization cost.
        params (ModelParams): Model rates.

    Returns:
        ProtectionPolicy: The closed-form optimum.
    """
    a = InputValidator.validate_nonnegative(a, "a")
    gamma = InputValidator.validate_nonnegative(gamma, "gamma")
    a_c = params.critical_action
    if a <= a_c:
        logging.info(f"a={a:g} ≤ a_c={a_c:g}: the infection dies out, no immunization needed")
        return ProtectionPolicy(1.0, PolicyRegime.IMMUNIZE_NONE, 0.0, trivial=True)
    if gamma > 1.0:
        eta = 1.0
        regime = PolicyRegime.IMMUNIZE_NONE
    else:
        eta = a_c / a
        regime = PolicyRegime.INTERIOR
    policy = ProtectionPolicy(eta, regime, total_cost_fixed(a, eta, gamma, params))
    logging.info(f"Fixed-agent protection a={a:g}, γ={gamma:g}: η*={eta:.6g} ({regime.value})")
    return policy


def strategic_theta_of_eta(
    eta: float,
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """Equilibrium infected fraction θ(η) of strategic agents with susceptible fraction η."""
    return solve_ce_immunized(u, params, eta, settings).theta


def strategic_total_cost(
    eta: float,
    gamma: float,
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> float:
    """D(η) = θ(η) + γ(1 - η) for strategic agents."""
    gamma = InputValidator.validate_nonnegative(gamma, "gamma")
    return strategic_theta_of_eta(eta, u, params, settings) + gamma * (1.0 - eta)


def extinction_eta(u: UtilityFunction, params: ModelParams) -> float:
    """
    Largest η at which strategic agents can no longer sustain the infection.

    With a finite peak action W, θ(η) = 0 for every η ≤ δ/(βW).
    """
    return min(1.0, params.critical_action / u.peak)


def theta_prime(
    eta: float,
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
    step: float = DERIVATIVE_STEP,
) -> float:
    """
    Derivative θ'(η) by Richardson-extrapolated finite differences.

    Central differences in the interior; one-sided differences at the
    extinction point η₀ (from the right) and at η = 1 (from the left), so
    the kink of θ at η₀ is never straddled.

    Args:
        eta (float): Susceptible fraction in [η₀, 1].
        u (UtilityFunction): Instantaneous utility.
        params (ModelParams): Model rates.
        settings (SolverSettings): Root-finder controls.
        step (float): Base difference step h.

    Returns:
        float: θ'(η).
    """
    eta = InputValidator.validate_fraction(eta, "eta")
    eta0 = extinction_eta(u, params)
    if eta < eta0:
        return 0.0

    def theta(x):
        return strategic_theta_of_eta(x, u, params, settings)

    # (left, right) reach of the stencil and its order of accuracy
    if eta - step < eta0:
        left, right, order = 0.0, 1.0, 1
    elif eta + step > 1.0:
        left, right, order = 1.0, 0.0, 1
    else:
        left, right, order = 1.0, 1.0, 2

    def diff(h):
        return (theta(eta + right * h) - theta(eta - left * h)) / ((left + right) * h)

    factor = 2.0 ** order
    return (factor * diff(step / 2.0) - diff(step)) / (factor - 1.0)


def _check_strategic_preconditions(u: UtilityFunction, params: ModelParams) -> None:
    """
    Raises:
        PreconditionError: If u''' < 0 fails or W ≤ 10·a_c.
    """
    if not validate_utility(u).negative_third_derivative:
        raise PreconditionError(f"{u} does not satisfy u''' < 0; strategic protection is undefined")
    a_c = params.critical_action
    if u.peak <= 10.0 * a_c:
        raise PreconditionError(
            f"Strategic protection needs W > 10·a_c; got W={u.peak:g}, a_c={a_c:g}"
        )


def theta_prime_limits(
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> Tuple[float, float]:
    """
    Cost thresholds γ₁ and γ₂: the slope of θ(η) at the bottom and top of its range.

    γ₁ is θ'(η₀+) at the extinction point η₀ = δ/(βW) (η₀ → 0 as W → ∞),
    γ₂ is θ'(1-).

    Raises:
        PreconditionError: If u''' < 0 fails or W ≤ 10·a_c.
    """
    _check_strategic_preconditions(u, params)
    gamma1 = theta_prime(extinction_eta(u, params), u, params, settings)
    gamma2 = theta_prime(1.0, u, params, settings)
    logging.info(f"Strategic cost thresholds for {u}: γ1={gamma1:.6g}, γ2={gamma2:.6g}")
    return gamma1, gamma2


def optimal_eta_strategic(
    gamma: float,
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
    limits: Optional[Tuple[float, float]] = None,
) -> ProtectionPolicy:
    """
    Optimal susceptible fraction for strategic agents.

    γ ≤ γ₁: immunize down to extinction (η* = η₀). γ ≥ γ₂: immunize nobody.
    Otherwise η* solves θ'(η) = γ, found by bisection since θ' is increasing.

    Args:
        gamma (float): Immunization cost.
        u (UtilityFunction): Instantaneous utility with u''' < 0.
        params (ModelParams): Model rates.
        settings (SolverSettings): Root-finder controls.
        limits (Optional[Tuple[float, float]]): Precomputed (γ₁, γ₂).

    Returns:
        ProtectionPolicy: The optimum with both thresholds attached.

    Raises:
        PreconditionError: If u''' < 0 fails or W ≤ 10·a_c.
    """
    gamma = InputValidator.validate_nonnegative(gamma, "gamma")
    if limits is None:
        gamma1, gamma2 = theta_prime_limits(u, params, settings)
    else:
        _check_strategic_preconditions(u, params)
        gamma1, gamma2 = limits
    eta0 = extinction_eta(u, params)
    if gamma <= gamma1:
        eta, regime = eta0, PolicyRegime.IMMUNIZE_ALL
    elif gamma >= gamma2:
        eta, regime = 1.0, PolicyRegime.IMMUNIZE_NONE
    else:
        result = solve_bracketed(
            lambda x: theta_prime(x, u, params, settings) - gamma,
            eta0, 1.0,
            settings=settings,
            name="optimal_eta_strategic",
        )
        eta, regime = result.root, PolicyRegime.INTERIOR
    cost = strategic_total_cost(eta, gamma, u, params, settings)
    logging.info(f"Strategic protection γ={gamma:g}: η*={eta:.6g} ({regime.value}), D={cost:.6g}")
    return ProtectionPolicy(eta, regime, cost, gamma1=gamma1, gamma2=gamma2)


def misdesign_cost(
    gammas: Sequence[float],
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> MisdesignReport:
    """
    Compare the fixed-agent design against the strategic optimum.

    The fixed-agent designer assumes everyone keeps the unprotected
    equilibrium action a^CE and applies the closed-form rule; strategic
    agents then re-equilibrate. The ratio is the resulting cost over the
    strategic optimum, reported unclamped; it sits at one (up to root-finder
    tolerance) where the two designs coincide.

    Args:
        gammas (Sequence[float]): Positive immunization costs.
        u (UtilityFunction): Instantaneous utility with u''' < 0.
        params (ModelParams): Model rates.
        settings (SolverSettings): Root-finder controls.

    Returns:
        MisdesignReport: Per-γ costs, ratios and the policy crossover.
    """
    gammas = [InputValidator.validate_positive(g, "gamma") for g in gammas]
    if not gammas:
        raise ValidationError("misdesign_cost needs at least one gamma")
    limits = theta_prime_limits(u, params, settings)
    a_ce = solve_ce(u, params, settings).action
    rows = []
    for gamma in gammas:
        naive = optimal_eta_fixed(a_ce, gamma, params).eta_star
        naive_cost = strategic_total_cost(naive, gamma, u, params, settings)
        best = optimal_eta_strategic(gamma, u, params, settings, limits=limits)
        ratio = naive_cost / best.total_cost
        rows.append({
            'gamma': gamma,
            'eta_fixed': naive,
            'cost_fixed': naive_cost,
            'eta_strategic': best.eta_star,
            'cost_strategic': best.total_cost,
            'ratio': ratio,
        })
    eta_fixed = params.critical_action / a_ce
    crossover = theta_prime(eta_fixed, u, params, settings)
    report = MisdesignReport(table=pd.DataFrame(rows), crossover_gamma=crossover, eta_fixed=eta_fixed)
    logging.info(
        f"Misdesign over {len(gammas)} costs: max ratio {float(np.max(report.ratios)):.4g}, "
        f"crossover γ={crossover:.4g}"
    )
    return report
