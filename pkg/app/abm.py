# Agent-Based Simulation


from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from app.epinet_config import DEFAULT_SETTINGS, SolverSettings
from app.equilibrium import best_response, long_term_utilities
from app.exceptions import ValidationError
from app.input_validators import InputValidator
from app.meanfield import TrajectoryTrace
from app.model_params import ModelParams, PopulationMix
from app.utility import UtilityFunction

# Random numbers are drawn in blocks of this size
DRAW_BLOCK = 1 << 16
# Events between from-scratch hazard recomputations
HAZARD_CHECK_EVERY = 10_000


class Strategy(str, Enum):
    """How agents choose their number of links."""

    FIXED = "fixed"
    FIXED_PER_TYPE = "fixed-per-type"
    ADAPTIVE = "adaptive"


class Matching(str, Enum):
    """How infection pressure reaches a healthy agent."""

    MEAN_FIELD = "mean-field"
    RANDOM_PARTNER = "random-partner"


@dataclass(frozen=True)
class AbmConfig:
    """
    Settings of one stochastic simulation run.

    Attributes:
        n_agents: Population size (at least 100).
        params: Model rates; ``delta`` is replaced by δ_k when a mix is given.
        strategy: Fixed common action, fixed per-type actions or adaptive best response.
        action: Common action for the fixed strategy.
        type_actions: Per-type actions for the fixed-per-type strategy.
        utility: Instantaneous utility for the adaptive strategy.
        mix: Optional heterogeneous population.
        immunized_fraction: 1 - η, spread proportionally over the types.
        theta0: Initial infected fraction of the whole population (≤ η).
        horizon: Simulated time.
        seed: Root seed of the run's random stream.
        sample_interval: Spacing of the recorded samples.
        matching: Mean-field hazard or explicit random-partner contacts.
        record_durations: Keep every completed infection's duration.
        refresh: Change in θ that triggers a fresh best response (adaptive).
        settings: Root-finder controls for the adaptive best responses.
    """

    n_agents: int = 10_000
    params: ModelParams = field(default_factory=ModelParams)
    strategy: Strategy = Strategy.FIXED
    action: float = 0.0
    type_actions: Tuple[float, ...] = ()
    utility: Optional[UtilityFunction] = None
    mix: Optional[PopulationMix] = None
    immunized_fraction: float = 0.0
    theta0: float = 0.5
    horizon: float = 200.0
    seed: int = 20240101
    sample_interval: float = 1.0
    matching: Matching = Matching.MEAN_FIELD
    record_durations: bool = False
    refresh: float = 1e-3
    settings: SolverSettings = DEFAULT_SETTINGS

    def __post_init__(self):
        object.__setattr__(self, 'strategy', Strategy(self.strategy))
        object.__setattr__(self, 'matching', Matching(self.matching))
        if isinstance(self.n_agents, bool) or not isinstance(self.n_agents, int) or self.n_agents < 100:
            raise ValidationError(f"n_agents must be an integer ≥ 100, got {self.n_agents!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2 ** 64:
            raise ValidationError(f"seed must be a 64-bit non-negative integer, got {self.seed!r}")
        InputValidator.validate_fraction(self.immunized_fraction, "immunized_fraction")
        InputValidator.validate_fraction(self.theta0, "theta0")
        InputValidator.validate_positive(self.horizon, "horizon")
        InputValidator.validate_positive(self.sample_interval, "sample_interval")
        InputValidator.validate_positive(self.refresh, "refresh")
        if self.sample_interval > self.horizon:
            raise ValidationError("sample_interval cannot exceed the horizon")
        if self.theta0 > self.eta + 1e-12:
            raise ValidationError(f"theta0={self.theta0:g} exceeds the susceptible fraction η={self.eta:g}")
        mix = self.population
        if self.n_agents * min(mix.weights) < 10:
            raise ValidationError("Every type needs at least 10 agents")
        if self.strategy is Strategy.FIXED:
            InputValidator.validate_nonnegative(self.action, "action")
        elif self.strategy is Strategy.FIXED_PER_TYPE:
            object.__setattr__(self, 'type_actions', mix.check_actions(self.type_actions))
        elif self.utility is None:
            raise ValidationError("The adaptive strategy needs a utility")

    @property
    def eta(self) -> float:
        """Susceptible fraction η."""
        return 1.0 - self.immunized_fraction

    @property
    def population(self) -> PopulationMix:
        """The mix, or a single type with the model's curing rate."""
        return self.mix if self.mix is not None else PopulationMix.homogeneous(self.params.delta)

    def to_dict(self) -> Dict[str, Any]:
        """Convert the configuration to a dictionary for serialization."""
        return {
            'n_agents': self.n_agents,
            'params': self.params.to_dict(),
            'strategy': self.strategy.value,
            'action': self.action,
            'type_actions': list(self.type_actions),
            'utility': self.utility.to_dict() if self.utility is not None else None,
            'mix': self.mix.to_dict() if self.mix is not None else None,
            'immunized_fraction': self.immunized_fraction,
            'theta0': self.theta0,
            'horizon': self.horizon,
            'seed': self.seed,
            'sample_interval': self.sample_interval,
            'matching': self.matching.value,
            'record_durations': self.record_durations,
            'refresh': self.refresh,
        }


@dataclass(eq=False)
class AbmTrace:
    """
    Recorded output of one simulation run.

    Attributes:
        times: Sample times.
        thetas: Infected fraction of the whole population at each sample.
        type_thetas: Infected fraction within each type (samples × K).
        actions: Mean action Σ w_k a_k at each sample (adaptive runs).
        infections: Number of infection events.
        curings: Number of curing events.
        contacts: Random-partner contacts, successful or not.
        initial_infected: Infected agents at time zero.
        final_infected: Infected agents at the end.
        extinction_time: Time the last infected agent was cured, if it happened.
        durations: Completed infection durations (when recorded).
        duration_starts: Infection start time of each recorded duration.
        hazard_drift: Largest relative gap between tracked and recomputed total hazard.
    """

    times: np.ndarray
    thetas: np.ndarray
    type_thetas: np.ndarray
    actions: Optional[np.ndarray] = None
    infections: int = 0
    curings: int = 0
    contacts: int = 0
    initial_infected: int = 0
    final_infected: int = 0
    extinction_time: Optional[float] = None
    durations: np.ndarray = field(default_factory=lambda: np.empty(0))
    duration_starts: np.ndarray = field(default_factory=lambda: np.empty(0))
    hazard_drift: float = 0.0

    @property
    def extinct(self) -> bool:
        return self.extinction_time is not None

    def curing_durations(self, started_before: float = math.inf) -> np.ndarray:
        """Completed durations of infections that began before ``started_before``."""
        return self.durations[self.duration_starts < started_before]

    def quasi_stationary_mean(self, burn_in: float) -> float:
        """
        Time-average of θ over the samples after ``burn_in`` and before extinction.

        Returns 0 when the run went extinct before the burn-in ended.
        """
        keep = self.times >= burn_in
        if self.extinct:
            keep &= self.times < self.extinction_time
        if not np.any(keep):
            return 0.0
        return float(np.mean(self.thetas[keep]))

    def to_frame(self) -> pd.DataFrame:
        """Trace as columns ``time``, ``theta``, ``theta_1``..``theta_K`` and ``action``."""
        data = {'time': self.times, 'theta': self.thetas}
        if self.type_thetas.shape[1] > 1:
            for k in range(self.type_thetas.shape[1]):
                data[f'theta_{k + 1}'] = self.type_thetas[:, k]
        if self.actions is not None:
            data['action'] = self.actions
        return pd.DataFrame(data)


@dataclass(frozen=True)
class StationaryEstimate:
    """
    Replicate-averaged quasi-stationary infected fraction.

    Attributes:
        mean: Mean over replicates.
        std_error: Standard error of the mean.
        ci_low: Lower end of the confidence interval.
        ci_high: Upper end of the confidence interval.
        values: Per-replicate time averages.
        extinctions: Replicates that went extinct.
        confidence: Confidence level of the interval.
    """

    mean: float
    std_error: float
    ci_low: float
    ci_high: float
    values: Tuple[float, ...]
    extinctions: int
    confidence: float = 0.95

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    def to_dict(self) -> Dict[str, Any]:
        return {
            'mean': self.mean,
            'std_error': self.std_error,
            'ci_low': self.ci_low,
            'ci_high': self.ci_high,
            'values': list(self.values),
            'extinctions': self.extinctions,
            'confidence': self.confidence,
        }


@dataclass(frozen=True, eq=False)
class DeviationReport:
    """
    Distance between the replicate-mean ABM path and the ODE trace.

    Attributes:
        times: ABM sample times.
        abm_mean: Ensemble mean of θ at each sample.
        ode: ODE solution interpolated onto the sample times.
        sup_norm: max |abm_mean - ode|.
        mean_abs: Time-average of |abm_mean - ode|.
        n_agents: Population size used.
        n_replicates: Ensemble size.
    """

    times: np.ndarray
    abm_mean: np.ndarray
    ode: np.ndarray
    sup_norm: float
    mean_abs: float
    n_agents: int
    n_replicates: int

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'time': self.times, 'abm_mean': self.abm_mean, 'ode': self.ode})


def _type_counts(n_agents: int, weights: Sequence[float]) -> List[int]:
    """Split n agents over the types by largest remainder."""
    exact = [n_agents * w for w in weights]
    counts = [int(math.floor(x)) for x in exact]
    order = sorted(range(len(exact)), key=lambda k: counts[k] - exact[k])
    for k in order[: n_agents - sum(counts)]:
        counts[k] += 1
    return counts


class _Simulation:
    """Event-driven SIS run over agent pools, one healthy and one infected pool per type."""

    def __init__(self, config: AbmConfig, seed_sequence: np.random.SeedSequence):
        self.config = config
        self.rng = np.random.default_rng(seed_sequence)
        mix = config.population
        self.n = config.n_agents
        self.deltas = list(mix.deltas)
        self.beta = config.params.beta
        self.n_types = mix.n_types
        self.type_sizes = _type_counts(self.n, mix.weights)
        self.weights = list(mix.weights)
        self.mean_field = config.matching is Matching.MEAN_FIELD

        self.agent_type = np.repeat(np.arange(self.n_types), self.type_sizes)
        self.infected_flag = [False] * self.n
        self.immune = np.zeros(self.n, dtype=bool)
        self.healthy: List[List[int]] = []
        self.infected: List[List[int]] = []
        start = 0
        for size in self.type_sizes:
            ids = list(range(start, start + size))
            n_immune = int(round(size * config.immunized_fraction))
            n_sick = min(int(round(size * config.theta0)), size - n_immune)
            self.immune[ids[:n_immune]] = True
            self.infected.append(ids[n_immune:n_immune + n_sick])
            self.healthy.append(ids[n_immune + n_sick:])
            start += size
        for pool in self.infected:
            for agent in pool:
                self.infected_flag[agent] = True
        self.n_infected = sum(len(pool) for pool in self.infected)
        self.infected_since = [0.0] * self.n

        self.actions = self._initial_actions()
        self.theta_at_refresh = self.theta
        self._reset_hazards()

    @property
    def theta(self) -> float:
        return self.n_infected / self.n

    def _initial_actions(self) -> List[float]:
        config = self.config
        if config.strategy is Strategy.FIXED:
            return [config.action] * self.n_types
        if config.strategy is Strategy.FIXED_PER_TYPE:
            return list(config.type_actions)
        return self._best_responses(hints=None)

    def _best_responses(self, hints: Optional[List[float]]) -> List[float]:
        params = self.config.params
        return [
            best_response(
                self.theta, self.config.utility, params.with_values(delta=delta_k),
                settings=self.config.settings,
                hint=None if hints is None else hints[k],
            ).action
            for k, delta_k in enumerate(self.deltas)
        ]

    def _reset_hazards(self) -> None:
        self.exposure = [a * self.beta for a in self.actions]
        self.infection_sum = math.fsum(len(h) * e for h, e in zip(self.healthy, self.exposure))
        self.curing_sum = math.fsum(len(i) * d for i, d in zip(self.infected, self.deltas))

    def total_hazard(self) -> float:
        """Σ_healthy a_i·β·θ + Σ_infected δ_i (contact rate a_i·β for random partners)."""
        contact = self.theta if self.mean_field else 1.0
        return self.infection_sum * contact + self.curing_sum

    def recomputed_hazard(self) -> float:
        """Total hazard rebuilt from the agent state arrays."""
        flags = np.array(self.infected_flag)
        healthy = np.bincount(self.agent_type[~flags & ~self.immune], minlength=self.n_types)
        sick = np.bincount(self.agent_type[flags], minlength=self.n_types)
        contact = float(np.sum(sick)) / self.n if self.mean_field else 1.0
        exposure = np.asarray(self.exposure)
        return float(np.sum(healthy * exposure)) * contact + float(np.sum(sick * np.asarray(self.deltas)))

    def _maybe_refresh(self) -> None:
        if abs(self.theta - self.theta_at_refresh) <= self.config.refresh:
            return
        self.actions = self._best_responses(hints=self.actions)
        self.theta_at_refresh = self.theta
        self.exposure = [a * self.beta for a in self.actions]
        self.infection_sum = math.fsum(len(h) * e for h, e in zip(self.healthy, self.exposure))

    def _pick(self, target: float) -> Tuple[bool, int]:
        """Event category for a uniform draw scaled by the total hazard: (is_infection, type)."""
        contact = self.theta if self.mean_field else 1.0
        for k in range(self.n_types):
            rate = len(self.healthy[k]) * self.exposure[k] * contact
            if target < rate:
                return True, k
            target -= rate
        for k in range(self.n_types):
            rate = len(self.infected[k]) * self.deltas[k]
            if target < rate:
                return False, k
            target -= rate
        # rounding overshoot lands on the last non-empty curing category
        last = max(k for k in range(self.n_types) if self.infected[k])
        return False, last

    @staticmethod
    def _swap_remove(pool: List[int], draw: float) -> int:
        """Remove and return a uniformly chosen member of ``pool``."""
        index = int(draw * len(pool))
        agent = pool[index]
        pool[index] = pool[-1]
        pool.pop()
        return agent

    def _infect(self, k: int, draw: float, t: float) -> int:
        agent = self._swap_remove(self.healthy[k], draw)
        self.infected[k].append(agent)
        self.infected_flag[agent] = True
        self.infected_since[agent] = t
        self.n_infected += 1
        self.infection_sum -= self.exposure[k]
        self.curing_sum += self.deltas[k]
        return agent

    def _cure(self, k: int, draw: float) -> int:
        agent = self._swap_remove(self.infected[k], draw)
        self.healthy[k].append(agent)
        self.infected_flag[agent] = False
        self.n_infected -= 1
        self.infection_sum += self.exposure[k]
        self.curing_sum -= self.deltas[k]
        return agent

    def run(self) -> AbmTrace:
        config = self.config
        sample_times = np.arange(0.0, config.horizon + 1e-12, config.sample_interval)
        n_samples = len(sample_times)
        thetas = np.empty(n_samples)
        type_thetas = np.empty((n_samples, self.n_types))
        adaptive = config.strategy is Strategy.ADAPTIVE
        actions = np.empty(n_samples) if adaptive else None
        durations: List[float] = []
        starts: List[float] = []
        initial_infected = self.n_infected
        infections = curings = contacts = events = 0
        hazard_drift = 0.0
        extinction_time = 0.0 if self.n_infected == 0 else None

        def record(index):
            thetas[index] = self.theta
            for k in range(self.n_types):
                type_thetas[index, k] = len(self.infected[k]) / self.type_sizes[k]
            if adaptive:
                actions[index] = math.fsum(w * a for w, a in zip(self.weights, self.actions))

        t = 0.0
        next_sample = 0
        cursor = DRAW_BLOCK
        while extinction_time is None:
            if cursor == DRAW_BLOCK:
                waits = self.rng.standard_exponential(DRAW_BLOCK).tolist()
                picks = self.rng.random(DRAW_BLOCK).tolist()
                members = self.rng.random(DRAW_BLOCK).tolist()
                partners = self.rng.random(DRAW_BLOCK).tolist()
                cursor = 0
            total = self.total_hazard()
            t_next = t + waits[cursor] / total
            while next_sample < n_samples and sample_times[next_sample] <= t_next:
                record(next_sample)
                next_sample += 1
            if t_next > config.horizon:
                break
            t = t_next
            is_infection, k = self._pick(picks[cursor] * total)
            if is_infection:
                if not self.mean_field:
                    contacts += 1
                if self.mean_field or self.infected_flag[int(partners[cursor] * self.n)]:
                    self._infect(k, members[cursor], t)
                    infections += 1
            else:
                agent = self._cure(k, members[cursor])
                curings += 1
                if config.record_durations:
                    durations.append(t - self.infected_since[agent])
                    starts.append(self.infected_since[agent])
                if self.n_infected == 0:
                    extinction_time = t
            cursor += 1
            events += 1
            if events % HAZARD_CHECK_EVERY == 0:
                fresh = self.recomputed_hazard()
                tracked = self.total_hazard()
                if fresh > 0.0:
                    hazard_drift = max(hazard_drift, abs(tracked - fresh) / fresh)
                self._reset_hazards()
            if adaptive:
                self._maybe_refresh()

        while next_sample < n_samples:
            record(next_sample)
            next_sample += 1
        return AbmTrace(
            times=sample_times,
            thetas=thetas,
            type_thetas=type_thetas,
            actions=actions,
            infections=infections,
            curings=curings,
            contacts=contacts,
            initial_infected=initial_infected,
            final_infected=self.n_infected,
            extinction_time=extinction_time,
            durations=np.asarray(durations),
            duration_starts=np.asarray(starts),
            hazard_drift=hazard_drift,
        )


def simulate(config: AbmConfig, seed_sequence: Optional[np.random.SeedSequence] = None) -> AbmTrace:
    """
    Run one continuous-time event-driven simulation.

    Healthy susceptible agents of type k are infected at hazard a_k·β·θ,
    where θ counts infected agents over the whole population (immunized
    agents included); infected agents cure at rate δ_k. The next event
    comes from the aggregate exponential race and its category is drawn in
    proportion to the category hazards. Adaptive agents re-solve their best
    response whenever θ has moved by more than ``config.refresh``.

    Args:
        config (AbmConfig): Run settings.
        seed_sequence (Optional[np.random.SeedSequence]): Stream to use instead
            of one rooted at ``config.seed``.

    Returns:
        AbmTrace: Samples, event tallies and diagnostics. Identical inputs give
        identical traces.
    """
    if seed_sequence is None:
        seed_sequence = np.random.SeedSequence(config.seed)
    trace = _Simulation(config, seed_sequence).run()
    logging.info(
        f"ABM n={config.n_agents} ({config.strategy.value}, {config.matching.value}): "
        f"{trace.infections} infections, {trace.curings} curings, "
        f"final θ={trace.thetas[-1]:.4g}, extinct={trace.extinct}"
    )
    return trace


def _run_replicate(task: Tuple[AbmConfig, np.random.SeedSequence]) -> AbmTrace:
    """Module-level worker so replicates can be shipped to other processes."""
    config, seed_sequence = task
    return simulate(config, seed_sequence)


def run_replicates(config: AbmConfig, n_replicates: int, jobs: int = 1) -> List[AbmTrace]:
    """
    Independent replicates on streams spawned from ``config.seed``, in spawn order.

    Args:
        config (AbmConfig): Shared run settings.
        n_replicates (int): Number of runs.
        jobs (int): Worker processes; 1 runs in-process.
    """
    children = np.random.SeedSequence(config.seed).spawn(n_replicates)
    tasks = [(config, child) for child in children]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_replicate, tasks))
    return [_run_replicate(task) for task in tasks]


def estimate_stationary(
    config: AbmConfig,
    n_replicates: int = 10,
    burn_in_fraction: float = 0.5,
    confidence: float = 0.95,
    jobs: int = 1,
) -> StationaryEstimate:
    """
    Quasi-stationary infected fraction with a t-based confidence interval.

    Each replicate contributes its time-average of θ after the burn-in and
    before extinction (0 if it died out during the burn-in).

    Args:
        config (AbmConfig): Run settings.
        n_replicates (int): Replicates, at least two.
        burn_in_fraction (float): Share of the horizon discarded, in [0, 1).
        confidence (float): Confidence level of the interval.
        jobs (int): Worker processes.

    Returns:
        StationaryEstimate: Mean, standard error and interval.

    Raises:
        ValidationError: On fewer than two replicates or a burn-in covering the horizon.
    """
    if n_replicates < 2:
        raise ValidationError(f"Need at least 2 replicates, got {n_replicates}")
    traces = run_replicates(config, n_replicates, jobs)
    return summarize_replicates(traces, config.horizon, burn_in_fraction, confidence)


def summarize_replicates(
    traces: Sequence[AbmTrace],
    horizon: float,
    burn_in_fraction: float = 0.5,
    confidence: float = 0.95,
) -> StationaryEstimate:
    """
    Confidence interval over replicates that have already been run.

    Raises:
        ValidationError: On fewer than two traces or a burn-in covering the horizon.
    """
    n_replicates = len(traces)
    if n_replicates < 2:
        raise ValidationError(f"Need at least 2 replicates, got {n_replicates}")
    burn_in_fraction = InputValidator.validate_fraction(burn_in_fraction, "burn_in_fraction")
    if burn_in_fraction >= 1.0:
        raise ValidationError("The burn-in must be shorter than the horizon")
    confidence = InputValidator.validate_fraction(confidence, "confidence")
    burn_in = burn_in_fraction * horizon
    values = np.array([trace.quasi_stationary_mean(burn_in) for trace in traces])
    extinctions = sum(trace.extinct for trace in traces)
    if extinctions:
        logging.warning(f"{extinctions} of {n_replicates} replicates went extinct")
    mean = float(np.mean(values))
    std_error = float(np.std(values, ddof=1) / math.sqrt(n_replicates))
    half_width = float(stats.t.ppf(0.5 + confidence / 2.0, n_replicates - 1)) * std_error
    estimate = StationaryEstimate(
        mean=mean,
        std_error=std_error,
        ci_low=mean - half_width,
        ci_high=mean + half_width,
        values=tuple(float(v) for v in values),
        extinctions=extinctions,
        confidence=confidence,
    )
    logging.info(
        f"Stationary estimate over {n_replicates} replicates: {mean:.5g} ± {half_width:.2g}"
    )
    return estimate


def trajectory_comparison(
    config: AbmConfig,
    ode_trace: TrajectoryTrace,
    n_replicates: int = 20,
    jobs: int = 1,
) -> DeviationReport:
    """
    Compare the replicate-mean ABM path with an ODE trace.

    Raises:
        ValidationError: If the initial conditions differ, the ODE horizon
            is shorter than the simulation, or fewer than two replicates are asked.
    """
    if n_replicates < 2:
        raise ValidationError(f"Need at least 2 replicates, got {n_replicates}")
    if abs(float(ode_trace.thetas[0]) - config.theta0) > 1e-12:
        raise ValidationError(
            f"ODE starts at θ={ode_trace.thetas[0]:g}, the simulation at θ0={config.theta0:g}"
        )
    if float(ode_trace.times[-1]) < config.horizon - 1e-9:
        raise ValidationError("The ODE trace ends before the simulation horizon")
    traces = run_replicates(config, n_replicates, jobs)
    times = traces[0].times
    abm_mean = np.mean([trace.thetas for trace in traces], axis=0)
    ode = np.interp(times, ode_trace.times, ode_trace.thetas)
    gap = np.abs(abm_mean - ode)
    report = DeviationReport(
        times=times,
        abm_mean=abm_mean,
        ode=ode,
        sup_norm=float(np.max(gap)),
        mean_abs=float(np.mean(gap)),
        n_agents=config.n_agents,
        n_replicates=n_replicates,
    )
    logging.info(
        f"ABM vs ODE at n={config.n_agents}: sup {report.sup_norm:.4g}, mean {report.mean_abs:.4g}"
    )
    return report


def simulate_discounted_utility(
    a: float,
    theta: float,
    u: UtilityFunction,
    params: ModelParams,
    n_runs: int = 100_000,
    seed: int = 20240101,
    start_infected: bool = False,
) -> Tuple[float, float]:
    """
    Monte-Carlo discounted utility of one agent alternating healthy and infected spells.

    Healthy spells last Exp(βθa) and earn u(a) per unit time, infected spells
    last Exp(δ) and earn nothing; everything is discounted at rate ρ. Runs stop
    once the discount factor drops below 1e-12.

    Args:
        a (float): Links held.
        theta (float): Infected fraction the agent faces.
        u (UtilityFunction): Instantaneous utility.
        params (ModelParams): Model rates.
        n_runs (int): Independent renewal paths.
        seed (int): Random seed.
        start_infected (bool): Estimate U_I instead of U_H.

    Returns:
        (mean, standard error) of the discounted utility.
    """
    hazard = long_term_utilities(a, theta, u, params).hazard
    rate = float(u.value(a))
    rho, delta = params.rho, params.delta
    cutoff = math.log(1e12) / rho
    rng = np.random.default_rng(seed)
    clock = np.zeros(n_runs)
    if start_infected:
        clock += rng.exponential(1.0 / delta, n_runs)
    total = np.zeros(n_runs)
    active = clock < cutoff
    while np.any(active):
        count = int(np.sum(active))
        now = clock[active]
        if hazard > 0.0:
            healthy = rng.exponential(1.0 / hazard, count)
        else:
            healthy = np.full(count, np.inf)
        total[active] += rate * (np.exp(-rho * now) - np.exp(-rho * (now + healthy))) / rho
        clock[active] = now + healthy + rng.exponential(1.0 / delta, count)
        active = clock < cutoff
    mean = float(np.mean(total))
    std_error = float(np.std(total, ddof=1) / math.sqrt(n_runs))
    logging.debug(f"Monte-Carlo utility a={a:g}, θ={theta:g}: {mean:.6g} ± {std_error:.2g}")
    return mean, std_error


def export_run(
    directory: Path,
    config: AbmConfig,
    trace: AbmTrace,
    estimate: Optional[StationaryEstimate] = None,
) -> Dict[str, Path]:
    """
    Write ``abm_trace.csv`` and ``abm_summary.json`` into ``directory``.

    Returns:
        Mapping of artifact name to written path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    trace_path = directory / 'abm_trace.csv'
    summary_path = directory / 'abm_summary.json'
    trace.to_frame().to_csv(trace_path, index=False)
    summary = {
        'config': config.to_dict(),
        'seed': config.seed,
        'infections': trace.infections,
        'curings': trace.curings,
        'extinction_time': trace.extinction_time,
        'hazard_drift': trace.hazard_drift,
        'estimate': estimate.to_dict() if estimate is not None else None,
    }
    with open(summary_path, 'w', encoding='utf-8') as f:
        json.dump(summary, f, indent=2)
    logging.info(f"ABM trace written to {trace_path}")
    return {'trace': trace_path, 'summary': summary_path}
