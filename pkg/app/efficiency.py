# System Efficiency


from dataclasses import dataclass
from enum import Enum
import logging
import math
from typing import Dict

from app.epinet_config import DEFAULT_SETTINGS, SolverSettings
from app.equilibrium import solve_ce
from app.exceptions import ValidationError
from app.input_validators import InputValidator
from app.meanfield import stationary_theta
from app.model_params import ModelParams
from app.utility import UtilityFunction


class PoaClassification(str, Enum):
    """Verdict of the pivot-action test on the price of anarchy."""

    BELOW_KAPPA = "poa-below-kappa"
    ABOVE_KAPPA = "poa-above-kappa"
    EQUALS_KAPPA = "poa-equals-kappa"
    TRIVIAL_W = "trivial-W-regime"


@dataclass(frozen=True)
class SocialOptimum:
    """
    Efficiency-maximising common action.

    Attributes:
        action: a^OPT (a_c, or W in the trivial regime).
        efficiency: E^OPT.
        trivial: True when W ≤ a_c and the peak is reached before the threshold.
    """

    action: float
    efficiency: float
    trivial: bool = False


@dataclass(frozen=True)
class PoaBound:
    """
    Pivot-action test comparing the price of anarchy with κ.

    Attributes:
        classification: Predicted side of κ the PoA lies on.
        a_dagger: Pivot action a†, the minimiser of the link-cost curve.
        kappa: κ = a†u(a_c)/(a_c·u(a†)); NaN in the trivial regime.
        slope: u'(a†).
        threshold: u(a†)/(2a† + ρ/β).
    """

    classification: PoaClassification
    a_dagger: float
    kappa: float
    slope: float = math.nan
    threshold: float = math.nan


@dataclass(frozen=True)
class EfficiencyReport:
    """
    Social optimum versus equilibrium.

    Attributes:
        a_opt: Socially optimal action.
        e_opt: Optimal efficiency.
        a_ce: Equilibrium action.
        e_ce: Equilibrium efficiency.
        poa: e_opt/e_ce, at least one.
        a_dagger: Pivot action a†.
        kappa: Bound κ (NaN when W ≤ a†).
        classification: Pivot-action verdict.
        trivial_bound: E^OPT/E(W), which always exceeds the PoA.
        residual: Residual of the equilibrium solve.
    """

    a_opt: float
    e_opt: float
    a_ce: float
    e_ce: float
    poa: float
    a_dagger: float
    kappa: float
    classification: PoaClassification
    trivial_bound: float
    residual: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            'a_opt': self.a_opt,
            'e_opt': self.e_opt,
            'a_ce': self.a_ce,
            'e_ce': self.e_ce,
            'poa': self.poa,
            'a_dagger': self.a_dagger,
            'kappa': self.kappa,
            'classification': self.classification.value,
            'trivial_bound': self.trivial_bound,
            'residual': self.residual,
        }


def efficiency(a: float, u: UtilityFunction, params: ModelParams) -> float:
    """
    Expected per-capita utility E(a) = (1 - θ(a))·u(a) in steady state.

    Args:
        a (float): Common action.
        u (UtilityFunction): Instantaneous utility.
        params (ModelParams): Model rates.

    Returns:
        float: u(a) up to a_c, (δ/(βa))·u(a) beyond.
    """
    theta = stationary_theta(a, params).theta
    return (1.0 - theta) * float(u.value(a))


def social_optimum(u: UtilityFunction, params: ModelParams) -> SocialOptimum:
    """
    Socially optimal action a^OPT = a_c with E^OPT = u(a_c).

    When W ≤ a_c the utility peaks before the epidemic threshold, so the
    optimum is W itself and is flagged as trivial.
    """
    a_c = params.critical_action
    peak = u.peak
    if peak <= a_c:
        logging.warning(f"W={peak:g} ≤ a_c={a_c:g}: social optimum is the peak action")
        return SocialOptimum(peak, float(u.value(peak)), trivial=True)
    return SocialOptimum(a_c, float(u.value(a_c)))


def pivot_action(params: ModelParams) -> float:
    """a† = (δ + √(δ² + ρδ))/β; always above 2·a_c."""
    delta = params.delta
    return (delta + math.sqrt(delta * delta + params.rho * delta)) / params.beta


def link_cost_curve(a: float, params: ModelParams) -> float:
    """
    f(a) = (βa² + ρa)/(βa - δ), the right side of the equilibrium condition in u/u' form.

    Raises:
        ValidationError: For a ≤ a_c, where f is undefined or negative.
    """
    a = InputValidator.validate_nonnegative(a, "a")
    if a <= params.critical_action:
        raise ValidationError(f"f(a) is defined only above a_c={params.critical_action:g}, got {a:g}")
    beta = params.beta
    return (beta * a * a + params.rho * a) / (beta * a - params.delta)


def poa_kappa(u: UtilityFunction, params: ModelParams) -> float:
    """κ = a†·u(a_c)/(a_c·u(a†))."""
    a_c = params.critical_action
    a_dagger = pivot_action(params)
    return a_dagger * float(u.value(a_c)) / (a_c * float(u.value(a_dagger)))


def poa_bound_classify(u: UtilityFunction, params: ModelParams) -> PoaBound:
    """
    Predict whether the price of anarchy lies below or above κ.

    PoA < κ exactly when u'(a†) < u(a†)/(2a† + ρ/β), i.e. when the
    utility grows slowly enough at the pivot action. The test needs W > a†.

    Args:
        u (UtilityFunction): Instantaneous utility.
        params (ModelParams): Model rates.

    Returns:
        PoaBound: Classification with a†, κ and both sides of the test.
    """
    a_dagger = pivot_action(params)
    if u.peak <= a_dagger:
        logging.info(f"W={u.peak:g} ≤ a†={a_dagger:g}: only the trivial PoA bound applies")
        return PoaBound(PoaClassification.TRIVIAL_W, a_dagger, math.nan)
    slope = float(u.derivative(a_dagger, 1))
    threshold = float(u.value(a_dagger)) / (2.0 * a_dagger + params.rho / params.beta)
    if math.isclose(slope, threshold, rel_tol=1e-12):
        verdict = PoaClassification.EQUALS_KAPPA
    elif slope < threshold:
        verdict = PoaClassification.BELOW_KAPPA
    else:
        verdict = PoaClassification.ABOVE_KAPPA
    return PoaBound(verdict, a_dagger, poa_kappa(u, params), slope, threshold)


def price_of_anarchy(
    u: UtilityFunction,
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> EfficiencyReport:
    """
    PoA = E^OPT/E^CE at the unique conjectural equilibrium, with the κ test attached.

    Raises:
        TrivialRegimeError: If W ≤ a_c (from the equilibrium solve).
        ConvergenceError: If the equilibrium solve fails.
    """
    ce = solve_ce(u, params, settings)
    optimum = social_optimum(u, params)
    e_ce = efficiency(ce.action, u, params)
    bound = poa_bound_classify(u, params)
    report = EfficiencyReport(
        a_opt=optimum.action,
        e_opt=optimum.efficiency,
        a_ce=ce.action,
        e_ce=e_ce,
        poa=optimum.efficiency / e_ce,
        a_dagger=bound.a_dagger,
        kappa=bound.kappa,
        classification=bound.classification,
        trivial_bound=optimum.efficiency / efficiency(u.peak, u, params),
        residual=ce.residual,
    )
    logging.info(
        f"PoA for {u}: {report.poa:.6g} (κ={report.kappa:.6g}, {report.classification.value})"
    )
    return report
