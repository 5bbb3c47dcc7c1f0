import pytest

from app.exceptions import (
    ConfigurationError,
    ConvergenceError,
    EpinetError,
    OperationError,
    PreconditionError,
    TrivialRegimeError,
    ValidationError,
)


def test_epinet_error_is_base_exception():
    with pytest.raises(EpinetError) as exc_info:
        raise EpinetError("Base error occurred")
    assert str(exc_info.value) == "Base error occurred"


@pytest.mark.parametrize("error_class", [
    ValidationError, ConfigurationError, OperationError,
    PreconditionError, TrivialRegimeError, ConvergenceError,
])
def test_errors_are_epinet_errors(error_class):
    with pytest.raises(EpinetError) as exc_info:
        raise error_class("failed")
    assert isinstance(exc_info.value, error_class)
    assert str(exc_info.value) == "failed"


def test_precondition_errors_are_operation_errors():
    assert issubclass(PreconditionError, OperationError)
    assert issubclass(TrivialRegimeError, PreconditionError)


def test_convergence_error_is_operation_error():
    with pytest.raises(OperationError):
        raise ConvergenceError("no sign change")


def test_validation_is_not_operation_error():
    assert not issubclass(ValidationError, OperationError)
    assert not issubclass(ConfigurationError, OperationError)


def test_trivial_regime_caught_as_precondition():
    with pytest.raises(PreconditionError, match="always dies out"):
        raise TrivialRegimeError("the epidemic always dies out")
