# Epinet Command Line


import argparse
import logging
from pathlib import Path
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app import __version__
from app.exceptions import (
    ConfigurationError,
    ConvergenceError,
    EpinetError,
    PreconditionError,
    ValidationError,
)
from app.observers import LoggingObserver, ManifestObserver
from app.runner import RunOutcome, ScenarioRunner
from app.scenario_config import (
    CELL_MODES,
    MATCHINGS,
    PROTECT_MODES,
    STRATEGIES,
    SWEEP_AXES,
    ScenarioConfig,
    merge_overrides,
)
from app.scenarios import scenario_configs, scenario_names

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_CONVERGENCE = 4

COMMANDS = {
    'steady': "Stationary infected fraction for a fixed action",
    'ce': "Conjectural equilibrium of the link formation game",
    'dynamics': "Fixed-strategy or best-response trajectories",
    'protect': "Optimal immunization for fixed or strategic agents",
    'poa': "Price of anarchy and its pivot-action bound",
    'hetero': "Heterogeneous population with per-type curing rates",
    'abm': "Agent-based simulation with seeded replicates",
    'sweep': "Cartesian sweep over one or two axes",
    'misdesign': "Cost of designing immunization for fixed agents",
}

# argparse destination -> scenario key
FLAG_KEYS = {
    'beta': 'beta', 'delta': 'delta', 'rho': 'rho', 'c0': 'c0',
    'utility': 'utility', 'a': 'a', 'gamma': 'gamma', 'eta': 'eta', 'theta0': 'theta0',
    'horizon': 'horizon', 'epsilon': 'epsilon', 'seed': 'seed',
    'protect_mode': 'protect_mode', 'strategy': 'strategy',
    'weights': 'weights', 'deltas': 'deltas', 'type_actions': 'type_actions',
    'n_agents': 'n_agents', 'replicates': 'replicates', 'immunized': 'immunized_fraction',
    'matching': 'matching', 'burn_in': 'burn_in_fraction', 'sample_interval': 'sample_interval',
    'sweep_mode': 'sweep_mode',
}


def _shape_entry(text: str) -> Tuple[str, float]:
    """Parse ``KEY=VALUE`` for a utility shape parameter."""
    key, sep, value = text.partition('=')
    try:
        if not sep or not key:
            raise ValueError
        return key, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got '{text}'")


def _axis_entry(text: str) -> Tuple[str, List[float]]:
    """Parse ``NAME=v1,v2,...`` or ``NAME=start:stop:count`` for a sweep axis."""
    name, sep, values = text.partition('=')
    if not sep or name not in SWEEP_AXES:
        raise argparse.ArgumentTypeError(
            f"expected NAME=values with NAME in {', '.join(SWEEP_AXES)}, got '{text}'"
        )
    try:
        if ':' in values:
            start, stop, count = values.split(':')
            grid = np.linspace(float(start), float(stop), int(count))
            return name, [round(float(v), 10) for v in grid]
        return name, [float(v) for v in values.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse axis values '{values}'")


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)

    model = common.add_argument_group('model')
    model.add_argument('--beta', type=float, help="Infection rate per infected link")
    model.add_argument('--delta', type=float, help="Curing rate")
    model.add_argument('--rho', type=float, help="Discount rate")
    model.add_argument('--c0', type=float, help="Cost per link")
    model.add_argument('--utility', help="Utility family: log, sqrt, exponential, cubic, linear")
    model.add_argument('--shape', type=_shape_entry, action='append', metavar='KEY=VALUE',
                       help="Utility shape parameter, repeatable")

    values = common.add_argument_group('mode values')
    values.add_argument('--a', type=float, help="Links per agent")
    values.add_argument('--gamma', type=float, nargs='+', help="Immunization costs")
    values.add_argument('--eta', type=float, nargs='+', help="Susceptible fractions")
    values.add_argument('--theta0', type=float, nargs='+', help="Initial infected fractions")
    values.add_argument('--horizon', type=float, help="Integration or simulation time")
    values.add_argument('--epsilon', type=float, help="Target distance to θ^CE for convergence times")
    values.add_argument('--mode', '--protect-mode', dest='protect_mode', choices=PROTECT_MODES,
                        help="Protection design for fixed or strategic agents")
    values.add_argument('--strategy', choices=STRATEGIES, help="How agents pick their links")

    population = common.add_argument_group('population')
    population.add_argument('--weights', type=float, nargs='+', help="Type proportions")
    population.add_argument('--deltas', type=float, nargs='+', help="Per-type curing rates")
    population.add_argument('--type-actions', type=float, nargs='+', help="Per-type fixed actions")

    abm = common.add_argument_group('agent-based simulation')
    abm.add_argument('--n-agents', type=int, help="Population size")
    abm.add_argument('--replicates', type=int, help="Independent replicates")
    abm.add_argument('--immunized', type=float, help="Immunized fraction 1 - η")
    abm.add_argument('--matching', choices=MATCHINGS, help="How infection pressure reaches agents")
    abm.add_argument('--burn-in', type=float, help="Share of the horizon discarded")
    abm.add_argument('--sample-interval', type=float, help="Spacing of recorded samples")

    sweep = common.add_argument_group('sweep')
    sweep.add_argument('--sweep-mode', choices=CELL_MODES, help="Mode evaluated in every cell")
    sweep.add_argument('--axis', type=_axis_entry, action='append', metavar='NAME=VALUES',
                       help="Sweep axis as v1,v2,... or start:stop:count, at most two")

    run = common.add_argument_group('run')
    run.add_argument('--config', type=Path, help="JSON scenario file; flags override it")
    run.add_argument('--scenario', choices=scenario_names(), help="Bundled preset")
    run.add_argument('--seed', type=int, help="Root random seed")
    run.add_argument('--jobs', type=int, help="Worker processes")
    run.add_argument('--out', type=Path, help="Output directory")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per mode plus ``run``."""
    parser = argparse.ArgumentParser(
        prog='epinet',
        description="Strategic link formation under SIS epidemics: solvers, sweeps and simulation",
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest='command', required=True)
    common = _common_arguments()
    for name, help_text in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text, description=help_text)
    run = subparsers.add_parser(
        'run', parents=[common],
        help="Run a scenario file, a preset or a recorded manifest",
    )
    run.add_argument('--manifest', type=Path, help="manifest.json of an earlier run to repeat")
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Flat scenario overrides from the parsed flags; unset flags are left out."""
    overrides = {key: getattr(args, dest) for dest, key in FLAG_KEYS.items()}
    if args.shape:
        overrides['shape'] = dict(args.shape)
    if args.axis:
        overrides['axes'] = dict(args.axis)
    if args.command != 'run':
        overrides['mode'] = args.command
    return {key: value for key, value in overrides.items() if value is not None}


def dispatch(runner: ScenarioRunner, args: argparse.Namespace) -> List[RunOutcome]:
    """
    Resolve what to run from the parsed flags and run it.

    Raises:
        ConfigurationError: If ``run`` is given nothing to run.
    """
    overrides = collect_overrides(args)
    manifest = getattr(args, 'manifest', None)
    if manifest is not None:
        return [runner.rerun(manifest, args.out, args.jobs)]
    if args.scenario:
        overrides.pop('mode', None)
        parts = scenario_configs(args.scenario, overrides)
        out_dir = args.out if args.out is not None else runner.config.output_dir / args.scenario
        return runner.run_preset(parts, out_dir, args.jobs)
    if args.config is not None:
        scenario = ScenarioConfig.load(args.config, overrides)
    elif args.command == 'run':
        raise ConfigurationError("run needs --config, --scenario or --manifest")
    else:
        scenario = ScenarioConfig.from_dict(merge_overrides({}, overrides))
    return [runner.run(scenario, args.out, args.jobs)]


def print_outcome(outcome: RunOutcome) -> None:
    """Print a short summary of a finished run."""
    results = outcome.results
    if len(outcome.cells) == 1:
        table = results.drop(columns='cell').dropna(axis=1, how='all')
        print(table.to_string(index=False) if not table.empty else "No values")
        for key, value in outcome.cells[0].labels.items():
            print(f"{key}: {value}")
    else:
        print(f"{len(outcome.cells)} cells, {len(results)} values")
        print(results.head(20).to_string(index=False))
    print(f"max residual: {outcome.manifest.max_residual:.3g}")
    print(f"Wrote {', '.join(outcome.manifest.outputs)} to {outcome.output_dir}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Command-line entry point.

    Returns:
        int: 0 on success, 2 for configuration or validation failures, 3 for
        unmet preconditions, 4 for solver non-convergence, 1 otherwise.
    """
    args = build_parser().parse_args(argv)
    try:
        runner = ScenarioRunner()
        runner.add_observer(LoggingObserver())
        runner.add_observer(ManifestObserver(runner))
        outcomes = dispatch(runner, args)
    except (ConfigurationError, ValidationError) as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as e:
        print(f"Precondition not met: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ConvergenceError as e:
        print(f"Solver did not converge: {e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except EpinetError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        logging.error(f"Unexpected error: {e}")
        print(f"Unexpected error: {e}", file=sys.stderr)
        return EXIT_ERROR
    for outcome in outcomes:
        print_outcome(outcome)
    return EXIT_OK
