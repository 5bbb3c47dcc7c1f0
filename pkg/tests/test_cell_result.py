import math

import pandas as pd

from app.cell_result import CellResult


def test_add_records_coordinates():
    cell = CellResult(index=0, mode='protect')
    cell.add('eta_star', 0.67, gamma=0.3)
    assert cell.rows == [{'gamma': 0.3, 'quantity': 'eta_star', 'value': 0.67}]


def test_add_skips_non_finite_values():
    cell = CellResult(index=0, mode='poa')
    cell.add('kappa', math.nan)
    cell.add('poa', math.inf)
    assert cell.rows == []


def test_add_converts_to_float():
    cell = CellResult(index=0, mode='abm')
    cell.add('extinctions', 3)
    assert isinstance(cell.rows[0]['value'], float)


def test_add_trace_long_format():
    cell = CellResult(index=1, mode='dynamics')
    frame = pd.DataFrame({'time': [0.0, 1.0], 'theta': [0.1, 0.2], 'action': [5.0, math.nan]})
    cell.add_trace('theta0=0.1', frame)
    assert cell.traces == [
        {'series': 'theta0=0.1', 'time': 0.0, 'quantity': 'theta', 'value': 0.1},
        {'series': 'theta0=0.1', 'time': 1.0, 'quantity': 'theta', 'value': 0.2},
        {'series': 'theta0=0.1', 'time': 0.0, 'quantity': 'action', 'value': 5.0},
    ]


def test_note_residual_keeps_maximum():
    cell = CellResult(index=0, mode='ce')
    cell.note_residual(1e-12)
    cell.note_residual(3e-11)
    cell.note_residual(None)
    cell.note_residual(math.nan)
    cell.note_residual(1e-13)
    assert cell.residual == 3e-11


def test_to_dict():
    cell = CellResult(index=2, mode='steady', axes={'a': 4.0})
    cell.labels['regime'] = 'endemic'
    cell.seeds.append(7)
    cell.artifacts['trace'] = object()
    assert cell.to_dict() == {
        'index': 2,
        'mode': 'steady',
        'axes': {'a': 4.0},
        'labels': {'regime': 'endemic'},
        'residual': 0.0,
        'seeds': [7],
    }
