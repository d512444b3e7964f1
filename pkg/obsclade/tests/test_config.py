# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Test config.py module."""

# LOCAL
from obsclade.config import conf, getref


def test_getref():
    ref = getref()
    assert sorted(ref) == ['collision_rtol', 'finite_n_slack',
                           'oracle_max_n', 'quad_max_evaluations',
                           'quad_rtol', 'threads', 'z_threshold']
    assert ref['z_threshold'] == 4.0


def test_set_temp():
    with conf.set_temp('z_threshold', 3.0):
        assert getref()['z_threshold'] == 3.0
    assert getref()['z_threshold'] == 4.0
