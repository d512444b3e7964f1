# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""``obsclade`` configurable items.

Numerical tolerances, budgets and Monte Carlo thresholds can be
re-configured as the user wishes via `astropy.config`.

``OBSCLADE_THREADS``, if defined as a system environment variable,
sets the default number of worker processes used for replicates.

"""
# STDLIB
import os

# THIRD-PARTY
from astropy import log
from astropy.config import ConfigNamespace, ConfigItem

__all__ = ['conf', 'getref', 'showref']


class Conf(ConfigNamespace):
    """Configuration parameters."""

    # Worker processes for Monte Carlo replicates
    threads = ConfigItem(
        int(os.environ.get('OBSCLADE_THREADS', 1)),
        'Default number of worker processes for replicates')

    # Rate quadrature for custom densities
    quad_rtol = ConfigItem(
        1e-10, 'Relative accuracy of merger rate quadrature')
    quad_max_evaluations = ConfigItem(
        1000000, 'Integrand evaluation budget per merger rate')

    # Limit moments
    collision_rtol = ConfigItem(
        1e-9, 'Relative threshold below which two total rates collide')
    explicit_check_tol = ConfigItem(
        1e-12, 'Tolerance between general and explicit limit moments')
    growth_quad_atol = ConfigItem(
        1e-10, 'Absolute tolerance of growth moment quadrature')
    dust_series_max_terms = ConfigItem(
        1000000, 'Maximum number of terms of the dust mean series')

    # Exact engines
    oracle_max_n = ConfigItem(7, 'Largest sample size for the oracle')
    exact_max_n = ConfigItem(
        30, 'Largest sample size for rational moment recursions')

    # Monte Carlo comparisons
    z_threshold = ConfigItem(
        4.0, 'Largest absolute z-score that still passes a comparison')
    finite_n_slack = ConfigItem(
        0.01, 'Additive slack for limit quantities at finite n')


conf = Conf()


def _get_ref_cfgitems():
    """Iterator for configuration items to be displayed."""
    for cfgitem in (Conf.threads,
                    Conf.quad_rtol,
                    Conf.quad_max_evaluations,
                    Conf.collision_rtol,
                    Conf.z_threshold,
                    Conf.finite_n_slack,
                    Conf.oracle_max_n):
        yield cfgitem.name, cfgitem()


def getref():
    """Return current values of select configurable items as a dictionary.

    Returns
    -------
    refdict : dict

    """
    return dict([x for x in _get_ref_cfgitems()])


def showref():  # pragma: no cover
    """Show the values of select configurable items."""
    info_str = '\n'
    for x in _get_ref_cfgitems():
        info_str += f'{x[0]:20s}: {x[1]}\n'
    log.info(info_str)
