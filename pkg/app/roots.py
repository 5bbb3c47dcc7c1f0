# Bracketed Root Finding


from dataclasses import dataclass
import logging
import math
from typing import Callable, Optional, Tuple

from scipy import optimize

from app.epinet_config import DEFAULT_SETTINGS, SolverSettings
from app.exceptions import ConvergenceError

ScalarFunction = Callable[[float], float]


@dataclass(frozen=True)
class RootResult:
    """
    Outcome of a bracketed scalar solve.

    Attributes:
        root: The located root.
        residual: |f(root)|.
        bracket: Interval the solver started from.
        iterations: Bisection iterations used.
    """

    root: float
    residual: float
    bracket: Tuple[float, float]
    iterations: int


def _slope(func: ScalarFunction, x: float, lo: float, hi: float) -> float:
    """Central-difference slope, kept inside the bracket."""
    h = 1e-6 * max(1.0, abs(x))
    left, right = max(lo, x - h), min(hi, x + h)
    if right <= left:
        return math.nan
    return (func(right) - func(left)) / (right - left)


def _newton_polish(
    func: ScalarFunction,
    x: float,
    lo: float,
    hi: float,
    fprime: Optional[ScalarFunction],
) -> float:
    """One Newton step, kept only if it stays in the bracket and lowers |f|."""
    fx = func(x)
    if fx == 0.0:
        return x
    slope = fprime(x) if fprime is not None else _slope(func, x, lo, hi)
    if not math.isfinite(slope) or slope == 0.0:
        return x
    candidate = x - fx / slope
    if lo <= candidate <= hi and abs(func(candidate)) < abs(fx):
        return candidate
    return x


def solve_bracketed(
    func: ScalarFunction,
    lo: float,
    hi: float,
    fprime: Optional[ScalarFunction] = None,
    settings: SolverSettings = DEFAULT_SETTINGS,
    name: str = "root",
) -> RootResult:
    """
    Find the root of a monotone scalar function on [lo, hi].

    Bisection to ``settings.root_tol`` followed by one round of Newton polish.

    Args:
        func: Function with a sign change on the bracket.
        lo: Lower end of the bracket.
        hi: Upper end of the bracket.
        fprime: Optional analytic derivative for the polish step.
        settings: Tolerance and iteration cap.
        name: Label used in log and error messages.

    Returns:
        RootResult: Root, residual and bookkeeping.

    Raises:
        ConvergenceError: If the bracket holds no sign change or bisection
            exhausts its iteration cap.
    """
    f_lo, f_hi = func(lo), func(hi)
    if f_lo == 0.0:
        return RootResult(lo, 0.0, (lo, hi), 0)
    if f_hi == 0.0:
        return RootResult(hi, 0.0, (lo, hi), 0)
    if math.isnan(f_lo) or math.isnan(f_hi) or (f_lo > 0) == (f_hi > 0):
        raise ConvergenceError(
            f"{name}: no sign change on [{lo:.6g}, {hi:.6g}] (f={f_lo:.3g}, {f_hi:.3g})"
        )
    try:
        root, info = optimize.bisect(
            func, lo, hi,
            xtol=settings.root_tol,
            maxiter=settings.max_bisect_iter,
            full_output=True,
            disp=False,
        )
    except (ValueError, RuntimeError) as e:
        raise ConvergenceError(f"{name}: bisection failed: {e}") from e
    if not info.converged:
        raise ConvergenceError(
            f"{name}: bisection did not converge in {settings.max_bisect_iter} iterations"
        )
    root = _newton_polish(func, root, lo, hi, fprime)
    residual = abs(func(root))
    logging.debug(f"{name}: root {root:.15g} residual {residual:.3g} after {info.iterations} steps")
    return RootResult(root=root, residual=residual, bracket=(lo, hi), iterations=info.iterations)
