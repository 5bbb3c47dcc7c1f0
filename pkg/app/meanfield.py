# Mean-Field Analysis


from dataclasses import dataclass
from enum import Enum
import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from app.epinet_config import DEFAULT_SETTINGS, SolverSettings
from app.exceptions import ConvergenceError, ValidationError
from app.input_validators import InputValidator
from app.model_params import ModelParams, PopulationMix
from app.roots import solve_bracketed


class Regime(str, Enum):
    """Long-run fate of the epidemic."""

    EXTINCT = "extinct"
    ENDEMIC = "endemic"


@dataclass(frozen=True)
class StationaryState:
    """
    Stationary infected fraction of the mean-field system.

    Attributes:
        theta: Infected fraction θ in [0, 1].
        regime: ``extinct`` exactly when θ = 0.
        per_type_theta: Infected fraction within each type (heterogeneous case).
        residual: Residual of the defining equation (0 for closed forms).
    """

    theta: float
    regime: Regime
    per_type_theta: Optional[Tuple[float, ...]] = None
    residual: float = 0.0

    @property
    def endemic(self) -> bool:
        return self.regime is Regime.ENDEMIC

    @staticmethod
    def of(theta: float) -> 'StationaryState':
        """Tag a homogeneous stationary level with its regime."""
        return StationaryState(theta, Regime.ENDEMIC if theta > 0.0 else Regime.EXTINCT)


@dataclass(frozen=True, eq=False)
class TrajectoryTrace:
    """
    Time series of the infected fraction from an ODE run.

    Attributes:
        times: Strictly increasing sample times.
        thetas: Infected fraction at each time, clamped to [0, 1].
        actions: Link action at each time, for best-response dynamics.
        terminal_theta: θ at the final time.
        terminal_slope: dθ/dt at the final time.
        converged: True when |dθ/dt| at the end is below the steady tolerance.
        degenerate: True for a start at θ = 0, where nothing evolves.
    """

    times: np.ndarray
    thetas: np.ndarray
    terminal_theta: float
    terminal_slope: float
    converged: bool
    actions: Optional[np.ndarray] = None
    degenerate: bool = False

    def is_monotone(self, tol: float = 1e-10) -> bool:
        """True when θᵗ never moves against its overall direction by more than ``tol``."""
        steps = np.diff(self.thetas)
        if self.thetas[-1] >= self.thetas[0]:
            return bool(np.all(steps >= -tol))
        return bool(np.all(steps <= tol))

    def to_frame(self) -> pd.DataFrame:
        """Trace as a DataFrame with ``time``, ``theta`` and, if present, ``action``."""
        data = {'time': self.times, 'theta': self.thetas}
        if self.actions is not None:
            data['action'] = self.actions
        return pd.DataFrame(data)


def critical_action(params: ModelParams) -> float:
    """
    Critical action a_c = δ/β below which a fixed strategy extinguishes the infection.

    Args:
        params (ModelParams): Model rates.

    Returns:
        float: a_c.
    """
    return params.critical_action


def stationary_theta(a: float, params: ModelParams) -> StationaryState:
    """
    Stationary infected fraction for a fixed action.

    θ(a) = 0 for a ≤ a_c, and 1 - δ/(βa) above the threshold.

    Args:
        a (float): Links per agent.
        params (ModelParams): Model rates.

    Returns:
        StationaryState: θ and its regime.
    """
    a = InputValidator.validate_nonnegative(a, "a")
    a_c = params.critical_action
    if a <= a_c:
        return StationaryState.of(0.0)
    # (a - a_c)/a equals 1 - δ/(βa) and stays positive for every a > a_c
    return StationaryState.of((a - a_c) / a)


def critical_effective_rate(a: float) -> float:
    """
    Critical effective infection rate υ_c = 1/a.

    Raises:
        ValidationError: If a is zero, where the rate is undefined.
    """
    a = InputValidator.validate_nonnegative(a, "a")
    if a == 0.0:
        raise ValidationError("Critical effective rate is undefined for a = 0")
    return 1.0 / a


def effective_rate_theta(a: float, upsilon: float) -> StationaryState:
    """
    Stationary level written in the effective rate υ = β/δ.

    θ = 0 when υ ≤ 1/a, otherwise θ = 1 - 1/(υa).
    """
    upsilon = InputValidator.validate_nonnegative(upsilon, "upsilon")
    threshold = critical_effective_rate(a)
    if upsilon <= threshold:
        return StationaryState.of(0.0)
    return StationaryState.of(1.0 - threshold / upsilon)


def stationary_theta_immunized(a: float, eta: float, params: ModelParams) -> StationaryState:
    """
    Stationary infected fraction when only a fraction η of agents is susceptible.

    θ(a, η) = max(0, η - δ/(βa)), always strictly below η when η > 0.

    Args:
        a (float): Links per agent.
        eta (float): Susceptible (non-immunized) fraction.
        params (ModelParams): Model rates.

    Returns:
        StationaryState: θ and its regime.
    """
    a = InputValidator.validate_nonnegative(a, "a")
    eta = InputValidator.validate_fraction(eta, "eta")
    if a == 0.0 or eta == 0.0:
        return StationaryState.of(0.0)
    return StationaryState.of(max(0.0, eta - params.critical_action / a))


def fixed_drift(theta: float, a: float, params: ModelParams) -> float:
    """dθ/dt = -δθ + (1 - θ)θaβ for a fixed action."""
    return -params.delta * theta + (1.0 - theta) * theta * a * params.beta


def integrate_drift(
    drift: Callable[[float], float],
    theta0: float,
    horizon: float,
    settings: SolverSettings = DEFAULT_SETTINGS,
    name: str = "trajectory",
    stop_at: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray, Optional[float]]:
    """
    Integrate a scalar drift with the adaptive RK45 pair.

    The state is clamped to [0, 1] before every drift evaluation and in the
    returned series. With ``stop_at`` the run ends at the first time θ
    crosses that level, located by the integrator's event finder.

    Returns:
        Times, infected fractions, and the crossing time (None if not reached).

    Raises:
        ValidationError: If the horizon is not positive.
        ConvergenceError: If the integrator reports failure.
    """
    horizon = InputValidator.validate_number(horizon, "horizon")
    if horizon <= 0:
        raise ValidationError(f"horizon must be positive, got {horizon}")

    def rhs(_t, y):
        return [drift(min(max(y[0], 0.0), 1.0))]

    events = None
    if stop_at is not None:
        def crossing(_t, y):
            return y[0] - stop_at
        crossing.terminal = True
        events = [crossing]

    solution = solve_ivp(
        rhs, (0.0, horizon), [theta0],
        method='RK45',
        atol=settings.ode_atol,
        rtol=settings.ode_rtol,
        max_step=settings.ode_max_step,
        events=events,
    )
    if not solution.success:
        raise ConvergenceError(f"{name}: integrator failed: {solution.message}")
    crossed = None
    if events is not None and len(solution.t_events[0]):
        crossed = float(solution.t_events[0][0])
    return solution.t, np.clip(solution.y[0], 0.0, 1.0), crossed


def integrate_fixed(
    theta0: float,
    a: float,
    params: ModelParams,
    horizon: float = 200.0,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> TrajectoryTrace:
    """
    Integrate dθ = -θδdt + (1 - θ)θaβdt for a fixed action.

    Args:
        theta0 (float): Initial infected fraction.
        a (float): Links per agent.
        params (ModelParams): Model rates.
        horizon (float): Final time.
        settings (SolverSettings): Integrator controls.

    Returns:
        TrajectoryTrace: The integrated trace.
    """
    theta0 = InputValidator.validate_fraction(theta0, "theta0")
    a = InputValidator.validate_nonnegative(a, "a")
    times, thetas, _ = integrate_drift(
        lambda th: fixed_drift(th, a, params), theta0, horizon, settings, "integrate_fixed"
    )
    slope = fixed_drift(float(thetas[-1]), a, params)
    trace = TrajectoryTrace(
        times=times,
        thetas=thetas,
        terminal_theta=float(thetas[-1]),
        terminal_slope=slope,
        converged=abs(slope) < settings.steady_tol,
        degenerate=theta0 == 0.0,
    )
    logging.info(
        f"Fixed-action trace a={a:g} from θ0={theta0:g}: terminal θ={trace.terminal_theta:.6g} "
        f"({len(times)} points, converged={trace.converged})"
    )
    return trace


def _type_rates(mix: PopulationMix, actions: Sequence[float], beta: float) -> np.ndarray:
    """x_k = β·a_k/δ_k, the per-type effective spreading rates."""
    return beta * np.asarray(actions, dtype=float) / np.asarray(mix.deltas, dtype=float)


def per_type_theta(theta: float, rates: np.ndarray) -> Tuple[float, ...]:
    """θ_k = θx_k/(θx_k + 1)."""
    return tuple(float(v) for v in theta * rates / (theta * rates + 1.0))


def hetero_balance(theta: float, mix: PopulationMix, rates: np.ndarray) -> float:
    """Σ_k w_k x_k/(θx_k + 1) - 1, decreasing in θ and zero at the stationary level."""
    weights = np.asarray(mix.weights)
    return float(np.sum(weights * rates / (theta * rates + 1.0))) - 1.0


def hetero_stationary(
    mix: PopulationMix,
    actions: Sequence[float],
    params: ModelParams,
    settings: SolverSettings = DEFAULT_SETTINGS,
) -> StationaryState:
    """
    Stationary infected fraction for K agent types with fixed per-type actions.

    Extinct when βΣ_k w_k a_k/δ_k ≤ 1; otherwise θ solves
    Σ_k w_k x_k/(θx_k + 1) = 1 with x_k = βa_k/δ_k.

    Args:
        mix (PopulationMix): Type weights and curing rates.
        actions (Sequence[float]): Links per agent of each type.
        params (ModelParams): Model rates (``delta`` is ignored in favour of δ_k).
        settings (SolverSettings): Root-finder controls.

    Returns:
        StationaryState: Aggregate θ, per-type θ_k and the equation residual.

    Raises:
        ValidationError: On dimension mismatch.
    """
    vector = mix.check_actions(actions)
    rates = _type_rates(mix, vector, params.beta)
    weights = np.asarray(mix.weights)
    if float(np.sum(weights * rates)) <= 1.0:
        return StationaryState(0.0, Regime.EXTINCT, tuple(0.0 for _ in vector), 0.0)

    result = solve_bracketed(
        lambda th: hetero_balance(th, mix, rates),
        0.0, 1.0,
        fprime=lambda th: -float(np.sum(weights * rates ** 2 / (th * rates + 1.0) ** 2)),
        settings=settings,
        name="hetero_stationary",
    )
    theta = result.root
    return StationaryState(theta, Regime.ENDEMIC, per_type_theta(theta, rates), result.residual)


def hetero_critical_beta(mix: PopulationMix, actions: Sequence[float]) -> float:
    """
    Critical infection rate β_c = 1/Σ_k w_k a_k/δ_k.

    Returns:
        float: β_c, or +∞ when every action is zero (no links, no epidemic).
    """
    vector = mix.check_actions(actions)
    exposure = math.fsum(w * a / d for w, a, d in zip(mix.weights, vector, mix.deltas))
    if exposure == 0.0:
        logging.warning("All actions are zero: the critical infection rate is infinite")
        return math.inf
    return 1.0 / exposure
