# Input Validation

from dataclasses import dataclass
import math
from typing import Any, Sequence, Tuple

from app.exceptions import ValidationError


@dataclass
class InputValidator:
    """Validates and converts numeric inputs for the solvers."""

    @staticmethod
    def validate_number(value: Any, name: str = "value") -> float:
        """
        Validate and convert input to a finite float.

        Args:
            value: Input value to validate (number or numeric string).
            name: Name used in error messages.

        Returns:
            float: Validated number.

        Raises:
            ValidationError: If input is not a finite number.
        """
        try:
            if isinstance(value, str):
                value = value.strip()
            if isinstance(value, bool):
                raise TypeError("booleans are not numbers")
            number = float(value)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Invalid number format for {name}: {value}") from e
        if not math.isfinite(number):
            raise ValidationError(f"{name} must be finite, got {value}")
        return number

    @staticmethod
    def validate_positive(value: Any, name: str = "value") -> float:
        """Validate a strictly positive finite number."""
        number = InputValidator.validate_number(value, name)
        if number <= 0:
            raise ValidationError(f"{name} must be positive, got {number}")
        return number

    @staticmethod
    def validate_nonnegative(value: Any, name: str = "value") -> float:
        """Validate a non-negative finite number."""
        number = InputValidator.validate_number(value, name)
        if number < 0:
            raise ValidationError(f"{name} must be non-negative, got {number}")
        return number

    @staticmethod
    def validate_fraction(value: Any, name: str = "fraction") -> float:
        """
        Validate a fraction in the closed interval [0, 1].

        Args:
            value: Input value to validate.
            name: Name used in error messages.

        Returns:
            float: The fraction.

        Raises:
            ValidationError: If the value lies outside [0, 1].
        """
        number = InputValidator.validate_number(value, name)
        if not 0.0 <= number <= 1.0:
            raise ValidationError(f"{name} must lie in [0, 1], got {number}")
        return number

    @staticmethod
    def validate_vector(values: Sequence[Any], name: str = "values") -> Tuple[float, ...]:
        """Validate a non-empty sequence of non-negative numbers."""
        if isinstance(values, (str, bytes)) or not hasattr(values, '__iter__'):
            raise ValidationError(f"{name} must be a sequence of numbers")
        vector = tuple(
            InputValidator.validate_nonnegative(v, f"{name}[{i}]") for i, v in enumerate(values)
        )
        if not vector:
            raise ValidationError(f"{name} must not be empty")
        return vector
