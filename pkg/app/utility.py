# Utility Families


from abc import ABC, abstractmethod
from dataclasses import dataclass, field, fields, replace
import logging
import math
from typing import Any, ClassVar, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np

from app.exceptions import ValidationError
from app.input_validators import InputValidator

ArrayLike = Union[float, np.ndarray]


class UtilityFunction(ABC):
    """
    Abstract base class for benefit/utility families.

    A family defines the benefit b(x) of forming x links and its first three
    derivatives; the net instantaneous utility is u(x) = b(x) - c0·x. Concrete
    families are frozen dataclasses whose fields are the shape parameters plus
    the per-link cost ``c0``.
    """

    kind: ClassVar[str] = "abstract"
    c0: float

    @abstractmethod
    def benefit(self, x: ArrayLike) -> ArrayLike:
        """Benefit b(x)."""
        pass  # pragma: no cover

    @abstractmethod
    def benefit_derivative(self, x: ArrayLike, order: int = 1) -> ArrayLike:
        """
        Derivative of the benefit of order 1, 2 or 3.

        Args:
            x: Number of links.
            order: Derivative order.

        Returns:
            The derivative evaluated at ``x``.
        """
        pass  # pragma: no cover

    @abstractmethod
    def _analytic_peak(self) -> Optional[float]:
        """Closed-form maximiser of u, or None when no interior peak exists."""
        pass  # pragma: no cover

    @property
    def domain_max(self) -> float:
        """Largest admissible action."""
        return math.inf

    @property
    def shape(self) -> Dict[str, float]:
        """Shape parameters keyed by name (everything except ``c0``)."""
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != 'c0'}

    def value(self, x: ArrayLike) -> ArrayLike:
        """Net utility u(x) = b(x) - c0·x."""
        return self.benefit(x) - self.c0 * np.asarray(x, dtype=float)

    def derivative(self, x: ArrayLike, order: int = 1) -> ArrayLike:
        """Derivative of u of order 1, 2 or 3."""
        if order == 1:
            return self.benefit_derivative(x, 1) - self.c0
        if order in (2, 3):
            return self.benefit_derivative(x, order)
        raise ValidationError(f"Derivative order must be 1, 2 or 3, got {order}")

    @property
    def peak(self) -> float:
        """
        Peak action W, the unconstrained maximiser of u.

        Raises:
            ValidationError: If the family has no interior peak.
        """
        w = self._analytic_peak()
        if w is None:
            raise ValidationError(f"{self} has no finite peak action")
        return w

    def ratio(self, x: float) -> float:
        """
        Guarded quotient u(x)/u'(x).

        The quotient is 0 at x = 0 (u(0) = 0 with u'(0) > 0) and +∞ at or
        beyond the peak, where u' vanishes.
        """
        if x <= 0.0:
            return 0.0
        slope = float(self.derivative(x, 1))
        if slope <= 0.0:
            return math.inf
        return float(self.value(x)) / slope

    def scaled(self, factor: float) -> 'UtilityFunction':
        """
        Return λ·u for λ > 0, scaling the benefit and the link cost together.

        Raises:
            ValidationError: If the factor is not positive.
        """
        factor = InputValidator.validate_positive(factor, "factor")
        return replace(self, kappa=self.kappa * factor, c0=self.c0 * factor)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the family tag, shape parameters and cost."""
        return {'kind': self.kind, 'shape': self.shape, 'c0': self.c0}

    def __str__(self) -> str:
        shape = ", ".join(f"{k}={v:g}" for k, v in self.shape.items())
        return f"{self.kind}({shape}, c0={self.c0:g})"


@dataclass(frozen=True)
class LogBenefit(UtilityFunction):
    """b(x) = κ·ln(1 + x); W = κ/c0 - 1."""

    kind: ClassVar[str] = "log"
    kappa: float = 1.0
    c0: float = 0.1

    def benefit(self, x):
        return self.kappa * np.log1p(x)

    def benefit_derivative(self, x, order=1):
        x = np.asarray(x, dtype=float)
        if order == 1:
            return self.kappa / (1.0 + x)
        if order == 2:
            return -self.kappa / (1.0 + x) ** 2
        return 2.0 * self.kappa / (1.0 + x) ** 3

    def _analytic_peak(self):
        if self.c0 <= 0 or self.kappa <= self.c0:
            return None
        return self.kappa / self.c0 - 1.0


@dataclass(frozen=True)
class SqrtBenefit(UtilityFunction):
    """b(x) = κ·√x; W = (κ/(2·c0))²."""

    kind: ClassVar[str] = "sqrt"
    kappa: float = 1.0
    c0: float = 0.1

    def benefit(self, x):
        return self.kappa * np.sqrt(x)

    def benefit_derivative(self, x, order=1):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide='ignore'):
            if order == 1:
                return 0.5 * self.kappa * x ** -0.5
            if order == 2:
                return -0.25 * self.kappa * x ** -1.5
            return 0.375 * self.kappa * x ** -2.5

    def _analytic_peak(self):
        if self.c0 <= 0 or self.kappa <= 0:
            return None
        return (self.kappa / (2.0 * self.c0)) ** 2


@dataclass(frozen=True)
class ExponentialBenefit(UtilityFunction):
    """Bounded benefit b(x) = κ·(1 - e^(-λx)); W = ln(κλ/c0)/λ."""

    kind: ClassVar[str] = "exponential"
    kappa: float = 1.0
    lam: float = 0.5
    c0: float = 0.1

    def benefit(self, x):
        return self.kappa * -np.expm1(-self.lam * np.asarray(x, dtype=float))

    def benefit_derivative(self, x, order=1):
        decay = np.exp(-self.lam * np.asarray(x, dtype=float))
        return self.kappa * (-1.0) ** (order + 1) * self.lam ** order * decay

    def _analytic_peak(self):
        if self.c0 <= 0 or self.lam <= 0 or self.kappa * self.lam <= self.c0:
            return None
        return math.log(self.kappa * self.lam / self.c0) / self.lam


@dataclass(frozen=True)
class CubicBenefit(UtilityFunction):
    """
    b(x) = κ·(x - ε·x³) on [0, 1/√(3ε)); W = √((κ - c0)/(3εκ)).

    The only shipped family with u''' < 0 everywhere, as required by the
    strategic protection analysis.
    """

    kind: ClassVar[str] = "cubic"
    epsilon: float = 0.001
    kappa: float = 1.0
    c0: float = 0.1

    @property
    def domain_max(self) -> float:
        return 1.0 / math.sqrt(3.0 * self.epsilon) if self.epsilon > 0 else math.inf

    def benefit(self, x):
        x = np.asarray(x, dtype=float)
        return self.kappa * (x - self.epsilon * x ** 3)

    def benefit_derivative(self, x, order=1):
        x = np.asarray(x, dtype=float)
        if order == 1:
            return self.kappa * (1.0 - 3.0 * self.epsilon * x ** 2)
        if order == 2:
            return -6.0 * self.kappa * self.epsilon * x
        return np.full_like(x, -6.0 * self.kappa * self.epsilon)

    def _analytic_peak(self):
        if self.epsilon <= 0 or self.c0 <= 0 or self.kappa <= self.c0:
            return None
        return math.sqrt((self.kappa - self.c0) / (3.0 * self.epsilon * self.kappa))


@dataclass(frozen=True)
class LinearBenefit(UtilityFunction):
    """
    Degenerate b(x) = κ·x.

    Registered so that invalid inputs can be diagnosed; it never passes
    validation because b'' = 0.
    """

    kind: ClassVar[str] = "linear"
    kappa: float = 0.0
    c0: float = 0.1

    def benefit(self, x):
        return self.kappa * np.asarray(x, dtype=float)

    def benefit_derivative(self, x, order=1):
        x = np.asarray(x, dtype=float)
        if order == 1:
            return np.full_like(x, self.kappa)
        return np.zeros_like(x)

    def _analytic_peak(self):
        return None


@dataclass
class UtilityDiagnostics:
    """
    Pass/fail report of the modelling assumptions on a utility.

    Attributes:
        utility: The diagnosed utility.
        checks: Assumption name mapped to pass (True) or fail (False).
        peak: The peak action W when it exists.
    """

    utility: UtilityFunction
    checks: Dict[str, bool] = field(default_factory=dict)
    peak: Optional[float] = None

    # u''' < 0 only gates the strategic protection analysis
    OPTIONAL_CHECKS: ClassVar[tuple] = ("u'''<0",)

    @property
    def passed(self) -> bool:
        """True when every mandatory assumption holds."""
        return all(ok for name, ok in self.checks.items() if name not in self.OPTIONAL_CHECKS)

    @property
    def negative_third_derivative(self) -> bool:
        """True when u''' < 0 on the whole domain."""
        return self.checks.get("u'''<0", False)

    @property
    def failures(self) -> List[str]:
        """Names of the failed mandatory assumptions."""
        return [n for n, ok in self.checks.items() if not ok and n not in self.OPTIONAL_CHECKS]

    def to_dict(self) -> Dict[str, Any]:
        return {'utility': self.utility.to_dict(), 'checks': dict(self.checks), 'peak': self.peak}


def _sign_grid(u: UtilityFunction, peak: Optional[float], n_points: int = 1000) -> np.ndarray:
    """Interior sign-check grid on (0, domain_max), truncated for unbounded domains."""
    upper = u.domain_max
    if math.isinf(upper):
        upper = 10.0 * peak if peak is not None else 100.0
    return np.linspace(0.0, upper, n_points + 2)[1:-1]


def validate_utility(u: UtilityFunction) -> UtilityDiagnostics:
    """
    Check the benefit/utility assumptions of the model.

    b(0) = 0 and b'(0) > c0 are evaluated exactly; b' > 0, b'' < 0 and
    u''' < 0 on a grid of interior points. Never raises.

    Args:
        u (UtilityFunction): Utility to diagnose.

    Returns:
        UtilityDiagnostics: Per-assumption report.
    """
    report = UtilityDiagnostics(utility=u)
    peak = u._analytic_peak()
    report.peak = peak
    grid = _sign_grid(u, peak)
    with np.errstate(all='ignore'):
        report.checks["b(0)=0"] = bool(float(u.benefit(0.0)) == 0.0)
        report.checks["b'(0)>c0"] = bool(float(u.benefit_derivative(0.0, 1)) > u.c0)
        report.checks["b'>0"] = bool(np.all(u.benefit_derivative(grid, 1) > 0))
        report.checks["b''<0"] = bool(np.all(u.benefit_derivative(grid, 2) < 0))
        report.checks["peak"] = peak is not None and 0.0 < peak < u.domain_max
        report.checks["u'''<0"] = bool(np.all(u.derivative(grid, 3) < 0))
    logging.debug(f"Diagnostics for {u}: {report.checks}")
    return report


class UtilityFactory:
    """
    Factory class for creating utility families by tag.

    Tags map to classes and new families can be registered at runtime.
    """

    _families: Dict[str, type] = {
        'log': LogBenefit,
        'sqrt': SqrtBenefit,
        'exponential': ExponentialBenefit,
        'cubic': CubicBenefit,
        'linear': LinearBenefit,
    }

    _aliases: Dict[str, str] = {
        'log-benefit': 'log',
        'sqrt-benefit': 'sqrt',
        'cubic-benefit': 'cubic',
        'bounded-exponential': 'exponential',
        'exp': 'exponential',
    }

    @classmethod
    def families(cls) -> List[str]:
        """Registered family tags."""
        return sorted(cls._families)

    @classmethod
    def register_family(cls, name: str, family_class: type) -> None:
        """
        Register a new utility family.

        Raises:
            TypeError: If the class does not inherit from UtilityFunction.
        """
        if not issubclass(family_class, UtilityFunction):
            raise TypeError("Family class must inherit from UtilityFunction")
        cls._families[name.lower()] = family_class

    @classmethod
    def create(
        cls,
        kind: str,
        shape: Optional[Union[Mapping[str, float], Sequence[float]]] = None,
        c0: float = 0.1,
    ) -> UtilityFunction:
        """
        Instantiate a family without validating the modelling assumptions.

        Args:
            kind: Family tag (e.g. ``sqrt``).
            shape: Shape parameters by name, or positionally in field order.
            c0: Per-link cost.

        Raises:
            ValidationError: If the tag or a shape parameter is unknown or invalid.
        """
        tag = cls._aliases.get(kind.lower(), kind.lower())
        family_class = cls._families.get(tag)
        if not family_class:
            raise ValidationError(f"Unknown utility family: {kind}")
        names = [f.name for f in fields(family_class) if f.name != 'c0']
        if shape is None:
            params: Dict[str, float] = {}
        elif isinstance(shape, Mapping):
            unknown = set(shape) - set(names)
            if unknown:
                raise ValidationError(f"Unknown shape parameters for {tag}: {sorted(unknown)}")
            params = dict(shape)
        else:
            if len(shape) > len(names):
                raise ValidationError(f"{tag} takes at most {len(names)} shape parameters")
            params = dict(zip(names, shape))
        params = {k: InputValidator.validate_nonnegative(v, k) for k, v in params.items()}
        c0 = InputValidator.validate_nonnegative(c0, "c0")
        return family_class(**params, c0=c0)


def make_utility(
    kind: str,
    shape: Optional[Union[Mapping[str, float], Sequence[float]]] = None,
    c0: float = 0.1,
) -> UtilityFunction:
    """
    Build a utility family and verify the model assumptions on it.

    Args:
        kind: Family tag: ``log``, ``sqrt``, ``exponential`` or ``cubic``.
        shape: Family shape parameters.
        c0: Per-link cost.

    Returns:
        UtilityFunction: A validated utility with analytic derivatives and peak.

    Raises:
        ValidationError: If the family violates b'(0) > c0, concavity, or has
            no interior peak action.
    """
    u = UtilityFactory.create(kind, shape, c0)
    report = validate_utility(u)
    if not report.passed:
        raise ValidationError(f"{u} violates model assumptions: {', '.join(report.failures)}")
    logging.debug(f"Created utility {u} with peak W={report.peak:g}")
    return u


def peak_action(u: UtilityFunction) -> float:
    """
    Peak action W where u'(W) = 0, computed in closed form.

    Args:
        u (UtilityFunction): A validated utility.

    Returns:
        float: The peak action W.
    """
    return u.peak
