# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles comparisons of Monte Carlo estimates against
exact values, and notes on formula variants that disagree with the
implemented ones.

"""
# STDLIB
import math
import warnings

# THIRD-PARTY
import numpy as np

# ASTROPY
from astropy import log
from astropy.table import Table
from astropy.utils.exceptions import AstropyUserWarning

# LOCAL
from obsclade import exceptions
from obsclade.asymptotics import (LimitMomentResult, bsc_limit_beta,
                                  limit_mean_dust, limit_moment_nodust)
from obsclade.config import conf
from obsclade.measure import Uniform
from obsclade.moments import MomentTable, compute_moments, moments_X_printed
from obsclade.ratetable import get_rate_table

__all__ = ['ComparisonRow', 'ComparisonReport', 'compare',
           'adjudicate_beta_law', 'errata_notes', 'ERRATA_TOPICS']

ERRATA_TOPICS = ('o_binomial', 'x_recursion', 'dust_constant', 'beta_law')


class ComparisonRow:
    """One exact value against one Monte Carlo estimate.

    The row passes iff ``|estimate - exact| <= z_threshold * stderr +
    slack``.

    """
    def __init__(self, statistic, exact, estimate, stderr, slack=0.0,
                 z_threshold=None, target='exact', gating=True, note=''):
        if z_threshold is None:
            z_threshold = conf.z_threshold
        self.statistic = statistic
        self.target = target
        self.exact = float(exact)
        self.estimate = float(estimate)
        self.stderr = float(stderr)
        self.slack = float(slack)
        self.z_threshold = float(z_threshold)
        self.gating = gating

        diff = self.estimate - self.exact
        if self.stderr > 0:
            self.z = diff / self.stderr
        else:
            self.z = 0.0 if diff == 0 else math.copysign(np.inf, diff)
        self.passed = bool(
            abs(diff) <= self.z_threshold * self.stderr + self.slack)
        if not self.passed and self.stderr == 0:
            note = '; '.join(filter(None, [note, 'degenerate variance']))
        self.note = note

    def __repr__(self):
        return (f'ComparisonRow({self.statistic!r}, target={self.target!r}, '
                f'z={self.z:.3g}, {self.verdict})')

    @property
    def verdict(self):
        return 'pass' if self.passed else 'fail'

    def to_dict(self):
        def clean(x):
            return x if np.isfinite(x) else None

        return {'statistic': self.statistic, 'target': self.target,
                'exact': clean(self.exact), 'estimate': clean(self.estimate),
                'stderr': clean(self.stderr), 'z': clean(self.z),
                'slack': self.slack, 'verdict': self.verdict,
                'gating': self.gating, 'note': self.note}


class ComparisonReport:
    """Rows of a comparison plus free-text notes.

    Only gating rows decide :attr:`passed`.

    """
    _COLUMNS = ('statistic', 'target', 'exact', 'estimate', 'stderr', 'z',
                'slack', 'verdict', 'gating', 'note')

    def __init__(self, rows=None, notes=None):
        self.rows = list(rows or [])
        self.notes = list(notes or [])

    def __repr__(self):
        return (f'ComparisonReport({len(self.rows)} rows, '
                f'{"passed" if self.passed else "failed"})')

    @property
    def passed(self):
        return all(row.passed for row in self.rows if row.gating)

    @property
    def exit_code(self):
        """0 if every gating row passes, 2 otherwise."""
        return 0 if self.passed else 2

    def extend(self, other):
        """Append rows and notes of another report."""
        self.rows.extend(other.rows)
        self.notes.extend(other.notes)

    def to_table(self):
        """Rows as `~astropy.table.Table`."""
        if not self.rows:
            return Table(names=self._COLUMNS,
                         dtype=(str, str, float, float, float, float, float,
                                str, bool, str))
        return Table(rows=[[getattr(row, c) for c in self._COLUMNS]
                           for row in self.rows], names=self._COLUMNS)

    def to_dict(self):
        """JSON-compatible form; non-finite numbers become `None`."""
        return {'rows': [row.to_dict() for row in self.rows],
                'notes': list(self.notes),
                'passed': self.passed}


def _exact_values(exact, n):
    """Map statistic id to ``(value, is_limit)``."""
    if isinstance(exact, MomentTable):
        if n is None:
            raise exceptions.PreconditionError(
                'Sample size n is needed to compare against a moment table.')
        return {k: (v, False) for k, v in exact.targets(n).items()}
    if isinstance(exact, LimitMomentResult):
        exact = [exact]
    if isinstance(exact, dict):
        return {k: (float(v), False) for k, v in exact.items()}
    return {res.statistic_id: (res.value, True) for res in exact}


def compare(exact, mc, slack=None, n=None, z_threshold=None):
    """Compare exact values with Monte Carlo estimates.

    Parameters
    ----------
    exact : `~obsclade.moments.MomentTable`, list of `~obsclade.asymptotics.LimitMomentResult`, or dict
        Exact values. A moment table is read at sample size ``n``.

    mc : `~obsclade.samplers.MonteCarloSummary`

    slack : float or `None`
        Additive slack for limit quantities. Default is
        ``conf.finite_n_slack``. Finite-n values get none.

    n : int or `None`

    z_threshold : float or `None`
        Default is ``conf.z_threshold``.

    Returns
    -------
    report : `ComparisonReport`

    Raises
    ------
    obsclade.exceptions.StructuralError
        An exact statistic has no Monte Carlo counterpart.

    """
    if slack is None:
        slack = conf.finite_n_slack
    values = _exact_values(exact, n)
    missing = [k for k in values if k not in mc]
    if missing:
        raise exceptions.StructuralError(
            f'No Monte Carlo estimate for {missing}; available: {mc.ids}.')

    rows = []
    for stat_id in sorted(values):
        value, is_limit = values[stat_id]
        rows.append(ComparisonRow(
            stat_id, value, mc.mean(stat_id), mc.stderr(stat_id),
            slack=slack if is_limit else 0.0, z_threshold=z_threshold,
            target='limit' if is_limit else 'exact'))
        log.debug(f'{rows[-1]!r}')
    return ComparisonReport(rows)


def adjudicate_beta_law(mc, theta, slack=None, z_threshold=None):
    """Second limit moment of the Bolthausen-Sznitman coalescent against
    both candidate values.

    The absorption-mixture value is gating; the Beta law value is
    informational.

    Returns
    -------
    report : `ComparisonReport`
        Two rows for ``E[(O/n)^2]`` and a note naming the passing target.

    """
    if slack is None:
        slack = conf.finite_n_slack
    stat_id = 'E[(O/n)^2]'
    mixture = limit_moment_nodust(2, theta, get_rate_table(Uniform(), 3))
    beta = bsc_limit_beta(theta)[2](2)
    est, se = mc.mean(stat_id), mc.stderr(stat_id)

    rows = [ComparisonRow(stat_id, mixture.value, est, se, slack=slack,
                          z_threshold=z_threshold, target='mixture'),
            ComparisonRow(stat_id, beta, est, se, slack=slack,
                          z_threshold=z_threshold, target='beta_law',
                          gating=False)]
    ok = [row.target for row in rows if row.passed]
    if len(ok) == 1:
        note = (f'Second limit moment: Monte Carlo {est:.6g} +- {se:.2g} '
                f'supports the {ok[0]} value ({rows[0].exact:.6g} for the '
                f'mixture, {rows[1].exact:.6g} for the Beta law).')
    else:
        note = (f'Second limit moment: Monte Carlo {est:.6g} +- {se:.2g} is '
                f'{"compatible with both" if ok else "incompatible with both"}'
                f' the mixture value {rows[0].exact:.6g} and the Beta law '
                f'value {rows[1].exact:.6g}.')
        warnings.warn(note, AstropyUserWarning)
    return ComparisonReport(rows, [note])


def errata_notes(topics, theta=None, spec=None, rates=None):
    """Plain-text notes on formula variants that the package does not
    use, with the numbers that tell them apart.

    Parameters
    ----------
    topics : iterable of str
        Subset of `ERRATA_TOPICS`.

    theta : float or `None`
        Needed by every topic except ``o_binomial``.

    spec : `~obsclade.measure.LambdaMeasure` or `None`
        Needed by ``dust_constant``.

    rates : `~obsclade.ratetable.RateTable` or `None`
        Needed by ``x_recursion``; must cover 3 blocks.

    Returns
    -------
    notes : list of str

    """
    notes = []
    for topic in topics:
        if topic not in ERRATA_TOPICS:
            raise exceptions.PreconditionError(
                f'Unknown errata topic {topic!r}, expected one of '
                f'{ERRATA_TOPICS}.')

        if topic == 'o_binomial':
            notes.append(
                'O recursion: when leaf 1 stays out of a k-merger, the '
                'weight is C(n-1, k) lambda_{n,k} / lambda_n, the chance '
                'that all k merged blocks avoid leaf 1. A variant weighting '
                'this branch by C(n-1, k-1) divides by zero at k = n and '
                'misses E(O_2^j) = 2^j; it is not used.')

        elif topic == 'x_recursion':
            table = compute_moments(3, 1, theta, rates)
            printed = moments_X_printed(3, 1, theta, rates)
            notes.append(
                'X recursion: the merged block joins the block of leaf 1 '
                'with probability (X - 1) / (n - k) only when leaf 1 is not '
                'among the k merged blocks, and surely otherwise. A variant '
                'using X / (n - k + 1) in both cases disagrees with the '
                f'competing-clocks definition from n = 3 on: here E(X_3) = '
                f'{table.ex(3):.12g}, the variant gives {printed[3, 1]:.12g}.')

        elif topic == 'dust_constant':
            res = limit_mean_dust(theta, spec)
            notes.append(
                'Dust limit mean: the series sum_k E(f[k]) P(K = k) is '
                'summed directly. Its closed form 1 - s/mu a/(1 - a) needs '
                'a = (1 - Lambda/mu) mu/(s + mu); with a = (1 - Lambda/mu) '
                f's/(s + mu) it gives {res.extra["printed_value"]:.12g} '
                f'instead of {res.value:.12g}.')

        else:
            alpha, beta, moments = bsc_limit_beta(theta)
            mixture = limit_moment_nodust(2, theta,
                                          get_rate_table(Uniform(), 3))
            notes.append(
                'Bolthausen-Sznitman limit: the absorption mixture gives '
                f'E(S^2) = {mixture.value:.12g}, while Beta({alpha:.6g}, '
                f'{beta:.6g}) gives {moments(2):.12g}. The Beta law treats '
                'the marks of successive jumps as independent although they '
                'share one mutation clock. Both are reported; Monte Carlo '
                'decides.')

    return notes
