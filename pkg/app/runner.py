# Scenario Runner


from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
import logging
import os
from pathlib import Path
import platform
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy

import app
from app.abm import AbmConfig, Strategy, export_run, run_replicates, summarize_replicates
from app.cell_result import CellResult
from app.efficiency import efficiency, link_cost_curve, price_of_anarchy
from app.epinet_config import EpinetConfig, SolverSettings
from app.equilibrium import (
    convergence_time_bounds,
    empirical_crossing_time,
    integrate_best_response,
    solve_ce,
    solve_ce_immunized,
    solve_hetero_ce,
)
from app.exceptions import EpinetError, OperationError
from app.meanfield import (
    critical_action,
    hetero_critical_beta,
    hetero_stationary,
    integrate_fixed,
    stationary_theta,
    stationary_theta_immunized,
)
from app.observers import RunObserver
from app.protection import (
    extinction_eta,
    misdesign_cost,
    optimal_eta_fixed,
    optimal_eta_strategic,
    strategic_theta_of_eta,
    theta_prime_limits,
    total_cost_fixed,
)
from app.run_manifest import RunManifest
from app.scenario_config import ScenarioConfig

RESULT_COLUMNS = ['quantity', 'value']
TRACE_COLUMNS = ['series', 'time', 'quantity', 'value']


def _steady(cell: CellResult, scenario: ScenarioConfig, settings: SolverSettings, jobs: int) -> None:
    params, a = scenario.params, scenario.a
    u = scenario.build_utility()
    state = stationary_theta(a, params)
    cell.add('critical_action', critical_action(params))
    cell.add('theta', state.theta)
    cell.add('efficiency', efficiency(a, u, params))
    cell.labels['regime'] = state.regime.value
    for eta in scenario.eta:
        cell.add('theta', stationary_theta_immunized(a, eta, params).theta, eta=eta)


def _ce(cell: CellResult, scenario: ScenarioConfig, settings: SolverSettings, jobs: int) -> None:
    params = scenario.params
    u = scenario.build_utility()
    result = solve_ce(u, params, settings)
    cell.add('a_ce', result.action)
    cell.add('theta_ce', result.theta)
    cell.add('residual', result.residual)
    cell.add('critical_action', params.critical_action)
    cell.add('peak_action', u.peak)
    cell.note_residual(result.residual)
    for eta in scenario.eta:
        immunized = solve_ce_immunized(u, params, eta, settings)
        cell.add('a_ce', immunized.action, eta=eta)
        cell.add('theta_ce', immunized.theta, eta=eta)
        cell.add('extinct', float(immunized.extinct), eta=eta)
        cell.note_residual(immunized.residual)


def _dynamics(cell: CellResult, scenario: ScenarioConfig, settings: SolverSettings, jobs: int) -> None:
    params = scenario.params
    adaptive = scenario.strategy == 'adaptive'
    u = scenario.build_utility() if adaptive else None
    theta_ce = solve_ce(u, params, settings).theta if adaptive else None
    if adaptive:
        cell.add('theta_ce', theta_ce)
    else:
        cell.add('theta_stationary', stationary_theta(scenario.a, params).theta)
    for theta0 in scenario.theta0:
        if adaptive:
            trace = integrate_best_response(theta0, u, params, scenario.horizon, settings)
        else:
            trace = integrate_fixed(theta0, scenario.a, params, scenario.horizon, settings)
        cell.add('terminal_theta', trace.terminal_theta, theta0=theta0)
        cell.add('terminal_slope', trace.terminal_slope, theta0=theta0)
        cell.add('converged', float(trace.converged), theta0=theta0)
        cell.add('monotone', float(trace.is_monotone()), theta0=theta0)
        cell.add_trace(f"theta0={theta0:g}", trace.to_frame())
        if adaptive and scenario.epsilon is not None and theta0 != theta_ce:
            bounds = convergence_time_bounds(theta0, scenario.epsilon, u, params, settings)
            crossing = empirical_crossing_time(
                theta0, scenario.epsilon, u, params, max(scenario.horizon, 2.0 * bounds.upper), settings
            )
            cell.add('time_lower_bound', bounds.lower, theta0=theta0)
            cell.add('time_upper_bound', bounds.upper, theta0=theta0)
            cell.add('crossing_time', crossing, theta0=theta0)


def _protect(cell: CellResult, scenario: ScenarioConfig, settings: SolverSettings, jobs: int) -> None:
    params = scenario.params
    if scenario.protect_mode == 'fixed':
        a = scenario.a
        for gamma in scenario.gamma:
            policy = optimal_eta_fixed(a, gamma, params)
            cell.add('eta_star', policy.eta_star, gamma=gamma)
            cell.add('optimal_cost', policy.total_cost, gamma=gamma)
            cell.labels[f"regime@gamma={gamma:g}"] = policy.regime.value
            for eta in scenario.eta:
                cell.add('cost', total_cost_fixed(a, eta, gamma, params), gamma=gamma, eta=eta)
        return
    u = scenario.build_utility()
    limits = theta_prime_limits(u, params, settings)
    cell.add('gamma1', limits[0])
    cell.add('gamma2', limits[1])
    cell.add('extinction_eta', extinction_eta(u, params))
    for gamma in scenario.gamma:
        policy = optimal_eta_strategic(gamma, u, params, settings, limits=limits)
        cell.add('eta_star', policy.eta_star, gamma=gamma)
        cell.add('optimal_cost', policy.total_cost, gamma=gamma)
        cell.labels[f"regime@gamma={gamma:g}"] = policy.regime.value
    for eta in scenario.eta:
        theta = strategic_theta_of_eta(eta, u, params, settings)
        cell.add('theta', theta, eta=eta)
        for gamma in scenario.gamma:
            cell.add('cost', theta + gamma * (1.0 - eta), gamma=gamma, eta=eta)


def _poa(cell: CellResult, scenario: ScenarioConfig, settings: SolverSettings, jobs: int) -> None:
    params = scenario.params
    report = price_of_anarchy(scenario.build_utility(), params, settings)
    for key, value in report.to_dict().items():
        if key != 'classification':
            cell.add(key, value)
    cell.add('link_cost_at_pivot', link_cost_curve(report.a_dagger, params))
    cell.labels['classification'] = report.classification.value
    cell.note_residual(report.residual)


def _hetero(cell: CellResult, scenario: ScenarioConfig, settings: SolverSettings, jobs: int) -> None:
    params, mix = scenario.params, scenario.mix
    if scenario.type_actions:
        state = hetero_stationary(mix, scenario.type_actions, params, settings)
        cell.add('theta_fixed', state.theta)
        cell.add('critical_beta', hetero_critical_beta(mix, scenario.type_actions))
        cell.note_residual(state.residual)
        for k, theta_k in enumerate(state.per_type_theta, start=1):
            cell.add('theta_fixed', theta_k, type=k)
    result = solve_hetero_ce(scenario.build_utility(), mix, params, settings)
    cell.add('theta_ce', result.theta)
    cell.add('mean_action', result.action)
    cell.add('residual', result.residual)
    cell.note_residual(result.residual)
    for k, (a_k, theta_k) in enumerate(zip(result.type_actions, result.type_thetas), start=1):
        cell.add('a_ce', a_k, type=k)
        cell.add('theta_ce', theta_k, type=k)


def _abm_config(scenario: ScenarioConfig, settings: SolverSettings) -> AbmConfig:
    return AbmConfig(
        n_agents=scenario.n_agents,
        params=scenario.params,
        strategy=scenario.strategy,
        action=scenario.a if scenario.a is not None else 0.0,
        type_actions=scenario.type_actions,
        utility=scenario.build_utility() if scenario.strategy == 'adaptive' else None,
        mix=scenario.mix,
        immunized_fraction=scenario.immunized_fraction,
        theta0=scenario.theta0[0] if scenario.theta0 else 0.5,
        horizon=scenario.horizon,
        seed=scenario.seed,
        sample_interval=scenario.sample_interval,
        matching=scenario.matching,
        refresh=settings.abm_refresh,
        settings=settings,
    )


def _mean_field_level(config: AbmConfig, settings: SolverSettings) -> Optional[float]:
    """Continuum prediction the simulation should settle near, when one is available."""
    params, mix = config.params, config.population
    if config.strategy is Strategy.FIXED_PER_TYPE:
        if config.eta < 1.0:
            return None
        return hetero_stationary(mix, config.type_actions, params, settings).theta
    if config.strategy is Strategy.FIXED:
        if config.mix is None:
            return stationary_theta_immunized(config.action, config.eta, params).theta
        if config.eta < 1.0:
            return None
        return hetero_stationary(mix, [config.action] * mix.n_types, params, settings).theta
    if config.mix is not None:
        return solve_hetero_ce(config.utility, mix, params, settings).theta if config.eta == 1.0 else None
    return solve_ce_immunized(config.utility, params, config.eta, settings).theta


def _abm(cell: CellResult, scenario: ScenarioConfig, settings: SolverSettings, jobs: int) -> None:
    config = _abm_config(scenario, settings)
    traces = run_replicates(config, scenario.replicates, jobs)
    estimate = summarize_replicates(traces, config.horizon, scenario.burn_in_fraction)
    for key in ('mean', 'std_error', 'ci_low', 'ci_high', 'extinctions'):
        cell.add(key, getattr(estimate, key))
    reference = _mean_field_level(config, settings)
    if reference is not None:
        cell.add('mean_field_theta', reference)
        cell.labels['ci_covers_mean_field'] = str(estimate.covers(reference)).lower()
    ensemble = pd.DataFrame({
        'time': traces[0].times,
        'theta': np.mean([trace.thetas for trace in traces], axis=0),
    })
    cell.add_trace('replicate-mean', ensemble)
    cell.seeds.append(config.seed)
    cell.artifacts.update({'config': config, 'trace': traces[0], 'estimate': estimate})


def _misdesign(cell: CellResult, scenario: ScenarioConfig, settings: SolverSettings, jobs: int) -> None:
    report = misdesign_cost(scenario.gamma, scenario.build_utility(), scenario.params, settings)
    for row in report.table.to_dict('records'):
        gamma = row.pop('gamma')
        for key, value in row.items():
            cell.add(key, value, gamma=gamma)
    cell.add('crossover_gamma', report.crossover_gamma)
    cell.add('eta_fixed', report.eta_fixed)


MODE_HANDLERS: Dict[str, Callable[[CellResult, ScenarioConfig, SolverSettings, int], None]] = {
    'steady': _steady,
    'ce': _ce,
    'dynamics': _dynamics,
    'protect': _protect,
    'poa': _poa,
    'hetero': _hetero,
    'abm': _abm,
    'misdesign': _misdesign,
}


def evaluate_cell(task: Tuple[int, Dict[str, float], ScenarioConfig, SolverSettings, int]) -> CellResult:
    """
    Evaluate one scenario cell; module level so worker processes can run it.

    Args:
        task: (index, axis values, cell scenario, solver settings, worker count inside the cell).

    Returns:
        CellResult: Everything the cell produced.
    """
    index, axes, scenario, settings, jobs = task
    cell = CellResult(index=index, mode=scenario.mode, axes=dict(axes))
    MODE_HANDLERS[scenario.mode](cell, scenario, settings, jobs)
    return cell


def package_versions() -> Dict[str, str]:
    """Versions recorded in every run manifest."""
    return {
        'epinet': app.__version__,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'pandas': pd.__version__,
        'scipy': scipy.__version__,
    }


def _long_frame(cells: Sequence[CellResult], attribute: str, tail: List[str]) -> pd.DataFrame:
    """Stack the rows of every cell into ``cell, <axes>, <coordinates>, <tail>`` columns."""
    axes = list(cells[0].axes) if cells else []
    records = [
        {'cell': cell.index, **cell.axes, **row}
        for cell in cells
        for row in getattr(cell, attribute)
    ]
    if not records:
        return pd.DataFrame(columns=['cell', *axes, *tail])
    frame = pd.DataFrame(records)
    middle = [c for c in frame.columns if c not in ('cell', *axes, *tail)]
    return frame[['cell', *axes, *middle, *tail]]


@dataclass
class RunOutcome:
    """
    What a finished run produced.

    Attributes:
        results: Long-format table of every derived quantity.
        traces: Long-format table of every time series.
        manifest: The run manifest.
        output_dir: Directory the files were written to.
        cells: Per-cell results in sweep order.
    """

    results: pd.DataFrame
    traces: pd.DataFrame
    manifest: RunManifest
    output_dir: Path
    cells: List[CellResult] = field(default_factory=list)


class ScenarioRunner:
    """
    Facade that expands scenarios into cells, evaluates them and writes the outputs.

    Logging is configured on construction. Observers are told about every
    finished cell in cell order, whatever order the worker pool finished them in.
    """

    def __init__(self, config: Optional[EpinetConfig] = None):
        """
        Initialize the runner with configuration.

        Args:
            config (Optional[EpinetConfig]): Toolkit settings; read from the
                environment when not given.
        """
        if config is None:
            config = EpinetConfig()

        self.config = config
        self.config.validate()

        os.makedirs(self.config.log_dir, exist_ok=True)
        self._setup_logging()

        self.settings = self.config.solver_settings()
        self.observers: List[RunObserver] = []
        self.manifest: Optional[RunManifest] = None

        logging.info("Scenario runner initialized with configuration")

    def _setup_logging(self) -> None:
        """
        Configure the logging system.

        Sets up logging to a file with the level named by ``EPINET_LOG``.
        """
        try:
            os.makedirs(self.config.log_dir, exist_ok=True)
            log_file = self.config.log_file.resolve()

            logging.basicConfig(
                filename=str(log_file),
                level=self.config.numeric_log_level,
                format='%(asctime)s - %(levelname)s - %(message)s',
                force=True
            )
            logging.info(f"Logging initialized at: {log_file}")
        except Exception as e:
            print(f"Error setting up logging: {e}")
            raise

    def add_observer(self, observer: RunObserver) -> None:
        """
        Register a new observer.

        Args:
            observer (RunObserver): The observer to be added.
        """
        self.observers.append(observer)
        logging.info(f"Added observer: {observer.__class__.__name__}")

    def remove_observer(self, observer: RunObserver) -> None:
        """
        Remove an existing observer.

        Args:
            observer (RunObserver): The observer to be removed.
        """
        self.observers.remove(observer)
        logging.info(f"Removed observer: {observer.__class__.__name__}")

    def notify_observers(self, cell: CellResult) -> None:
        """
        Notify all observers of a finished cell.

        Args:
            cell (CellResult): The cell that was evaluated.
        """
        for observer in self.observers:
            observer.update(cell)

    def evaluate(self, scenario: ScenarioConfig, jobs: Optional[int] = None) -> List[CellResult]:
        """
        Evaluate every cell of a scenario without writing files.

        A scenario without a seed gets the configured default seed, as in
        ``run``, so seedless agent-based cells stay reproducible.

        Sweeps with more than one cell are spread over ``jobs`` worker
        processes; a single cell hands the workers to its ABM replicates.

        Raises:
            ConfigurationError: If a cell fails validation.
            OperationError: If a computation fails.
        """
        jobs = jobs or self.config.jobs
        if scenario.seed is None:
            scenario = replace(scenario, seed=self.config.default_seed)
        cells = scenario.cells()
        try:
            if len(cells) > 1 and jobs > 1:
                tasks = [(i, axes, cell, self.settings, 1) for i, (axes, cell) in enumerate(cells)]
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    results = list(pool.map(evaluate_cell, tasks))
            else:
                results = [
                    evaluate_cell((i, axes, cell, self.settings, jobs))
                    for i, (axes, cell) in enumerate(cells)
                ]
        except EpinetError as e:
            logging.error(f"Scenario failed: {e}")
            raise
        except Exception as e:
            logging.error(f"Scenario failed: {e}")
            raise OperationError(f"Scenario failed: {e}") from e
        for cell in results:
            self.notify_observers(cell)
        return results

    def run(
        self,
        scenario: ScenarioConfig,
        out_dir: Optional[Path] = None,
        jobs: Optional[int] = None,
    ) -> RunOutcome:
        """
        Run a scenario and write ``results.csv``, ``traces.csv`` and ``manifest.json``.

        A scenario without a seed gets the configured default seed, which
        the manifest records so the run can be repeated.

        Args:
            scenario (ScenarioConfig): What to compute.
            out_dir (Optional[Path]): Output directory; the configured one by default.
            jobs (Optional[int]): Worker processes; the configured count by default.

        Returns:
            RunOutcome: The tables, the manifest and where they went.
        """
        if scenario.seed is None:
            scenario = replace(scenario, seed=self.config.default_seed)
        out_dir = Path(out_dir) if out_dir is not None else self.config.output_dir
        self.manifest = RunManifest(config=scenario.to_dict(), versions=package_versions())
        cells = self.evaluate(scenario, jobs)

        results = _long_frame(cells, 'rows', RESULT_COLUMNS)
        traces = _long_frame(cells, 'traces', TRACE_COLUMNS)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            results.to_csv(out_dir / 'results.csv', index=False)
            self.manifest.outputs.append('results.csv')
            if not traces.empty:
                traces.to_csv(out_dir / 'traces.csv', index=False)
                self.manifest.outputs.append('traces.csv')
            if scenario.mode == 'abm':
                artifacts = cells[0].artifacts
                written = export_run(out_dir, artifacts['config'], artifacts['trace'], artifacts['estimate'])
                self.manifest.outputs.extend(path.name for path in written.values())
            self.manifest.write(out_dir / 'manifest.json')
        except OSError as e:
            logging.error(f"Failed to write outputs to {out_dir}: {e}")
            raise OperationError(f"Failed to write outputs to {out_dir}: {e}") from e

        logging.info(f"Run finished: {len(cells)} cells, {len(results)} values written to {out_dir}")
        return RunOutcome(results, traces, self.manifest, out_dir, cells)

    def run_preset(
        self,
        parts: Sequence[ScenarioConfig],
        out_dir: Optional[Path] = None,
        jobs: Optional[int] = None,
    ) -> List[RunOutcome]:
        """Run every part of a preset into its own subdirectory named by the part label."""
        out_dir = Path(out_dir) if out_dir is not None else self.config.output_dir
        return [
            self.run(part, out_dir / (part.label or f"part{i}"), jobs)
            for i, part in enumerate(parts)
        ]

    def rerun(self, manifest_path: Path, out_dir: Optional[Path] = None, jobs: Optional[int] = None) -> RunOutcome:
        """
        Repeat the run a manifest describes.

        Logs a warning when ``results.csv`` beside the manifest differs from
        the recomputed table.

        Raises:
            ConfigurationError: If the manifest cannot be read.
        """
        manifest_path = Path(manifest_path)
        recorded = RunManifest.load(manifest_path)
        scenario = ScenarioConfig.from_dict(recorded.config)
        outcome = self.run(scenario, out_dir, jobs)
        previous = manifest_path.parent / 'results.csv'
        fresh = outcome.output_dir / 'results.csv'
        if previous.exists() and previous.resolve() != fresh.resolve():
            if previous.read_bytes() != fresh.read_bytes():
                logging.warning(f"Re-run of {manifest_path} produced different results")
        return outcome
