# Epinet Config


from dataclasses import dataclass
from pathlib import Path
import logging
import os
from typing import Optional

from dotenv import load_dotenv

from app.exceptions import ConfigurationError

# Load environment variables from a .env file into the program's environment
load_dotenv()


def get_project_root() -> Path:
    """
    Get the project root directory.

    Returns:
        Path: The root directory path of the project.
    """
    # app/epinet_config.py -> project root
    return Path(__file__).parent.parent


@dataclass(frozen=True)
class SolverSettings:
    """
    Numerical controls shared by every solver in the toolkit.

    Attributes:
        root_tol: Absolute tolerance on the independent variable for bisection.
        max_bisect_iter: Iteration cap for bisection.
        ode_atol: Absolute tolerance of the adaptive Runge-Kutta integrator.
        ode_rtol: Relative tolerance of the adaptive Runge-Kutta integrator.
        ode_max_step: Largest integrator step, in time units.
        steady_tol: A trace counts as converged when |dθ/dt| falls below this.
        abm_refresh: Change in θ that triggers a fresh best response in the
            agent-based simulator.
    """

    root_tol: float = 1e-12
    max_bisect_iter: int = 200
    ode_atol: float = 1e-9
    ode_rtol: float = 1e-9
    ode_max_step: float = 0.1
    steady_tol: float = 1e-8
    abm_refresh: float = 1e-3


DEFAULT_SETTINGS = SolverSettings()


class EpinetConfig:
    """
    Toolkit configuration settings.

    Manages directory paths, logging verbosity, worker count, the default
    random seed and the solver tolerances. Every value can be passed to the
    constructor, set through an ``EPINET_*`` environment variable, or left at
    its default.
    """

    def __init__(
        self,
        base_dir: Optional[Path] = None,
        log_level: Optional[str] = None,
        jobs: Optional[int] = None,
        default_seed: Optional[int] = None,
        root_tol: Optional[float] = None,
        max_bisect_iter: Optional[int] = None,
        ode_atol: Optional[float] = None,
        ode_rtol: Optional[float] = None,
        ode_max_step: Optional[float] = None,
        steady_tol: Optional[float] = None,
        abm_refresh: Optional[float] = None,
    ):
        """
        Initialize configuration with environment variables and defaults.

        Args:
            base_dir (Optional[Path]): Base directory for logs and output.
            log_level (Optional[str]): Logging level name, e.g. ``INFO``.
            jobs (Optional[int]): Worker processes for sweeps and replicates.
            default_seed (Optional[int]): Seed used when a scenario sets none.
            root_tol (Optional[float]): Bisection tolerance.
            max_bisect_iter (Optional[int]): Bisection iteration cap.
            ode_atol (Optional[float]): Integrator absolute tolerance.
            ode_rtol (Optional[float]): Integrator relative tolerance.
            ode_max_step (Optional[float]): Integrator maximum step.
            steady_tol (Optional[float]): Stationarity test on |dθ/dt|.
            abm_refresh (Optional[float]): Adaptive ABM refresh threshold on θ.
        """
        project_root = get_project_root()
        self.base_dir = base_dir or Path(
            os.getenv('EPINET_BASE_DIR', str(project_root))
        ).resolve()

        self.log_level = (log_level or os.getenv('EPINET_LOG', 'INFO')).upper()

        self.jobs = jobs if jobs is not None else int(os.getenv('EPINET_JOBS', '1'))

        self.default_seed = default_seed if default_seed is not None else int(
            os.getenv('EPINET_DEFAULT_SEED', '20240101')
        )

        self.root_tol = root_tol if root_tol is not None else float(
            os.getenv('EPINET_ROOT_TOL', '1e-12')
        )
        self.max_bisect_iter = max_bisect_iter if max_bisect_iter is not None else int(
            os.getenv('EPINET_MAX_BISECT_ITER', '200')
        )
        self.ode_atol = ode_atol if ode_atol is not None else float(
            os.getenv('EPINET_ODE_ATOL', '1e-9')
        )
        self.ode_rtol = ode_rtol if ode_rtol is not None else float(
            os.getenv('EPINET_ODE_RTOL', '1e-9')
        )
        self.ode_max_step = ode_max_step if ode_max_step is not None else float(
            os.getenv('EPINET_ODE_MAX_STEP', '0.1')
        )
        self.steady_tol = steady_tol if steady_tol is not None else float(
            os.getenv('EPINET_STEADY_TOL', '1e-8')
        )
        self.abm_refresh = abm_refresh if abm_refresh is not None else float(
            os.getenv('EPINET_ABM_REFRESH', '1e-3')
        )

    @property
    def log_dir(self) -> Path:
        """
        Get log directory path.

        Returns:
            Path: The log directory path.
        """
        return Path(os.getenv(
            'EPINET_LOG_DIR',
            str(self.base_dir / "logs")
        )).resolve()

    @property
    def log_file(self) -> Path:
        """
        Get log file path.

        Returns:
            Path: The log file path.
        """
        return Path(os.getenv(
            'EPINET_LOG_FILE',
            str(self.log_dir / "epinet.log")
        )).resolve()

    @property
    def output_dir(self) -> Path:
        """
        Get the default directory for CSV tables and run manifests.

        Returns:
            Path: The output directory path.
        """
        return Path(os.getenv(
            'EPINET_OUTPUT_DIR',
            str(self.base_dir / "output")
        )).resolve()

    @property
    def numeric_log_level(self) -> int:
        """Logging level as the integer constant understood by ``logging``."""
        return logging.getLevelName(self.log_level)

    def solver_settings(self) -> SolverSettings:
        """
        Bundle the numerical controls into an immutable settings object.

        Returns:
            SolverSettings: Settings passed to the solver modules.
        """
        return SolverSettings(
            root_tol=self.root_tol,
            max_bisect_iter=self.max_bisect_iter,
            ode_atol=self.ode_atol,
            ode_rtol=self.ode_rtol,
            ode_max_step=self.ode_max_step,
            steady_tol=self.steady_tol,
            abm_refresh=self.abm_refresh,
        )

    def validate(self) -> None:
        """
        Validate configuration settings.

        Raises:
            ConfigurationError: If any configuration parameter is invalid.
        """
        if self.jobs <= 0:
            raise ConfigurationError("jobs must be positive")
        if self.max_bisect_iter <= 0:
            raise ConfigurationError("max_bisect_iter must be positive")
        for name in ('root_tol', 'ode_atol', 'ode_rtol', 'ode_max_step',
                     'steady_tol', 'abm_refresh'):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")
        if not isinstance(self.numeric_log_level, int):
            raise ConfigurationError(f"Unknown log level: {self.log_level}")
