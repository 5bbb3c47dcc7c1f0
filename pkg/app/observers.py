# Run Observers

from abc import ABC, abstractmethod
import logging
from typing import Any

from app.cell_result import CellResult


class RunObserver(ABC):
    """
    Abstract base class for scenario-runner observers.

    Observers are notified once per finished cell, in cell order.
    """

    @abstractmethod
    def update(self, cell: CellResult) -> None:
        """
        Handle a finished cell.

        Args:
            cell (CellResult): The cell that was evaluated.
        """
        pass  # pragma: no cover


class LoggingObserver(RunObserver):
    """Observer that logs every finished cell."""

    def update(self, cell: CellResult) -> None:
        if cell is None:
            raise AttributeError("Cell cannot be None")
        axes = ", ".join(f"{k}={v:g}" for k, v in cell.axes.items()) or "single cell"
        logging.info(
            f"Cell {cell.index} ({cell.mode}; {axes}): {len(cell.rows)} values, "
            f"residual {cell.residual:.2g}"
        )


class ManifestObserver(RunObserver):
    """
    Observer that folds every cell into the run manifest.

    Tracks the largest solver residual, the seeds used and the categorical
    labels of each cell.
    """

    def __init__(self, runner: Any):
        """
        Args:
            runner (Any): Object exposing a ``manifest`` attribute.

        Raises:
            TypeError: If the runner has no manifest.
        """
        if not hasattr(runner, 'manifest'):
            raise TypeError("Runner must have a 'manifest' attribute")
        self.runner = runner

    def update(self, cell: CellResult) -> None:
        if cell is None:
            raise AttributeError("Cell cannot be None")
        manifest = self.runner.manifest
        if manifest is None:
            return
        manifest.max_residual = max(manifest.max_residual, cell.residual)
        for seed in cell.seeds:
            if seed not in manifest.seeds:
                manifest.seeds.append(seed)
        if cell.labels:
            manifest.labels[str(cell.index)] = dict(cell.labels)
