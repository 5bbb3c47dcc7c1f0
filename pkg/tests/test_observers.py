from unittest.mock import MagicMock, patch

import pytest

from app.cell_result import CellResult
from app.observers import LoggingObserver, ManifestObserver
from app.run_manifest import RunManifest


@pytest.fixture
def cell():
    result = CellResult(index=3, mode='ce', axes={'delta': 0.2}, residual=2e-12)
    result.add('a_ce', 4.9)
    return result


@patch('logging.info')
def test_logging_observer_logs_cell(logging_info_mock, cell):
    LoggingObserver().update(cell)
    logging_info_mock.assert_called_once_with(
        "Cell 3 (ce; delta=0.2): 1 values, residual 2e-12"
    )


@patch('logging.info')
def test_logging_observer_single_cell(logging_info_mock):
    LoggingObserver().update(CellResult(index=0, mode='steady'))
    assert "single cell" in logging_info_mock.call_args[0][0]


def test_logging_observer_no_cell():
    with pytest.raises(AttributeError, match="Cell cannot be None"):
        LoggingObserver().update(None)


def test_manifest_observer_folds_cells(cell):
    runner = MagicMock()
    runner.manifest = RunManifest(config={'mode': 'ce'})
    observer = ManifestObserver(runner)
    cell.seeds.extend([5, 5])
    cell.labels['regime'] = 'endemic'
    observer.update(cell)
    second = CellResult(index=4, mode='ce', residual=1e-13)
    second.seeds.append(6)
    observer.update(second)
    assert runner.manifest.max_residual == 2e-12
    assert runner.manifest.seeds == [5, 6]
    assert runner.manifest.labels == {'3': {'regime': 'endemic'}}


def test_manifest_observer_without_manifest(cell):
    runner = MagicMock()
    runner.manifest = None
    ManifestObserver(runner).update(cell)


def test_manifest_observer_requires_manifest_attribute():
    with pytest.raises(TypeError, match="must have a 'manifest' attribute"):
        ManifestObserver(object())


def test_manifest_observer_no_cell():
    runner = MagicMock()
    with pytest.raises(AttributeError, match="Cell cannot be None"):
        ManifestObserver(runner).update(None)
