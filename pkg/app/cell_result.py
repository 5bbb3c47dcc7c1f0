# Cell Result Model


from dataclasses import dataclass, field
import math
from typing import Any, Dict, List, Optional

import pandas as pd


@dataclass
class CellResult:
    """
    Value Object holding everything one scenario cell produced.

    A cell is one point of a sweep, or the whole run when no sweep is asked.
    Numbers go to ``rows`` in long format, time series to ``traces``, and
    categorical outcomes (regimes, classifications) to ``labels``.
    """

    index: int                  # Position of the cell in the sweep
    mode: str                   # Mode the cell ran
    axes: Dict[str, float] = field(default_factory=dict)   # Sweep coordinates of the cell
    rows: List[Dict[str, Any]] = field(default_factory=list)
    traces: List[Dict[str, Any]] = field(default_factory=list)
    labels: Dict[str, str] = field(default_factory=dict)
    residual: float = 0.0
    seeds: List[int] = field(default_factory=list)
    artifacts: Dict[str, Any] = field(default_factory=dict)    # Objects for export, not serialized

    def add(self, quantity: str, value: float, **within: float) -> None:
        """
        Record one number; ``within`` names in-cell coordinates such as ``gamma``.

        Non-finite values are skipped.
        """
        value = float(value)
        if not math.isfinite(value):
            return
        self.rows.append({**within, 'quantity': quantity, 'value': value})

    def add_trace(self, series: str, frame: pd.DataFrame) -> None:
        """
        Record a time series given as a frame with a ``time`` column.

        Every other column becomes a quantity of the series.
        """
        for column in frame.columns:
            if column == 'time':
                continue
            for time, value in zip(frame['time'], frame[column]):
                if math.isfinite(float(value)):
                    self.traces.append(
                        {'series': series, 'time': float(time), 'quantity': column, 'value': float(value)}
                    )

    def note_residual(self, residual: Optional[float]) -> None:
        """Keep the largest solver residual seen in this cell."""
        if residual is not None and math.isfinite(residual):
            self.residual = max(self.residual, float(residual))

    def to_dict(self) -> Dict[str, Any]:
        """Convert the cell summary to a dictionary for serialization."""
        return {
            'index': self.index,
            'mode': self.mode,
            'axes': dict(self.axes),
            'labels': dict(self.labels),
            'residual': self.residual,
            'seeds': list(self.seeds),
        }
