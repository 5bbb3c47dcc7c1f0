# Model Parameters


from dataclasses import dataclass, field, replace
from decimal import Decimal
import math
from typing import Any, Dict, Sequence, Tuple

from app.exceptions import ValidationError
from app.input_validators import InputValidator


@dataclass(frozen=True)
class ModelParams:
    """
    Value Object holding the epidemiological and economic rates.

    Attributes:
        beta: Per-link infection rate (1/time).
        delta: Curing rate (1/time).
        rho: Discount rate (1/time).
        c0: Direct cost per link and unit time.
    """

    beta: float = 0.1
    delta: float = 0.3
    rho: float = 0.05
    c0: float = 0.1

    def __post_init__(self):
        """Validate and normalise every rate to a float."""
        object.__setattr__(self, 'beta', InputValidator.validate_positive(self.beta, "beta"))
        object.__setattr__(self, 'delta', InputValidator.validate_positive(self.delta, "delta"))
        object.__setattr__(self, 'rho', InputValidator.validate_positive(self.rho, "rho"))
        object.__setattr__(self, 'c0', InputValidator.validate_nonnegative(self.c0, "c0"))

    @property
    def critical_action(self) -> float:
        """
        Critical action a_c = δ/β.

        Evaluated in decimal arithmetic on the shortest repr of each rate so
        that decimal inputs give decimal-exact thresholds (0.3/0.1 is 3).
        """
        return float(Decimal(repr(self.delta)) / Decimal(repr(self.beta)))

    def with_values(self, **changes: float) -> 'ModelParams':
        """
        Return a copy with some rates replaced.

        Args:
            **changes: New values keyed by field name.

        Returns:
            ModelParams: The modified copy (validated again).
        """
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, float]:
        """Convert parameters to a dictionary for serialization."""
        return {'beta': self.beta, 'delta': self.delta, 'rho': self.rho, 'c0': self.c0}

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> 'ModelParams':
        """
        Create parameters from a dictionary.

        Raises:
            ValidationError: If a key is unknown or a value is invalid.
        """
        unknown = set(data) - {'beta', 'delta', 'rho', 'c0'}
        if unknown:
            raise ValidationError(f"Unknown model parameters: {sorted(unknown)}")
        return ModelParams(**data)

    def __str__(self) -> str:
        return f"β={self.beta:g}, δ={self.delta:g}, ρ={self.rho:g}, c0={self.c0:g}"


@dataclass(frozen=True)
class PopulationMix:
    """
    Heterogeneous population: type weights w_k and curing rates δ_k.

    Attributes:
        weights: Fractions of the population per type, summing to one.
        deltas: Per-type curing rates.
    """

    weights: Tuple[float, ...]
    deltas: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        weights = tuple(
            InputValidator.validate_positive(w, f"weights[{i}]") for i, w in enumerate(self.weights)
        )
        deltas = tuple(
            InputValidator.validate_positive(d, f"deltas[{i}]") for i, d in enumerate(self.deltas)
        )
        if not weights:
            raise ValidationError("A population mix needs at least one type")
        if len(weights) != len(deltas):
            raise ValidationError(
                f"weights and deltas lengths differ: {len(weights)} != {len(deltas)}"
            )
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValidationError(f"weights must sum to 1, got {math.fsum(weights)!r}")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'deltas', deltas)

    @property
    def n_types(self) -> int:
        """Number of agent types K."""
        return len(self.weights)

    @staticmethod
    def homogeneous(delta: float) -> 'PopulationMix':
        """Single-type mix with curing rate ``delta``."""
        return PopulationMix(weights=(1.0,), deltas=(delta,))

    def check_actions(self, actions: Sequence[float]) -> Tuple[float, ...]:
        """
        Validate a per-type action vector against this mix.

        Raises:
            ValidationError: On dimension mismatch or negative actions.
        """
        vector = InputValidator.validate_vector(actions, "actions")
        if len(vector) != self.n_types:
            raise ValidationError(
                f"Expected {self.n_types} actions, got {len(vector)}"
            )
        return vector

    def to_dict(self) -> Dict[str, Any]:
        """Convert the mix to a dictionary for serialization."""
        return {'weights': list(self.weights), 'deltas': list(self.deltas)}

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> 'PopulationMix':
        """Create a mix from a dictionary with ``weights`` and ``deltas``."""
        try:
            return PopulationMix(weights=tuple(data['weights']), deltas=tuple(data['deltas']))
        except (KeyError, TypeError) as e:
            raise ValidationError(f"Invalid population mix: {e}") from e
