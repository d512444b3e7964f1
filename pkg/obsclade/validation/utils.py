# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Utility functions for acceptance tests."""

# STDLIB
import os

# THIRD-PARTY
import numpy as np
import pytest

# LOCAL
from obsclade.config import conf
from obsclade.ratetable import get_rate_table
from obsclade.report import compare
from obsclade.samplers import MonteCarloSummary, run_replicates

RUN_SLOW = bool(os.environ.get('OBSCLADE_RUN_SLOW'))

slow = pytest.mark.skipif(not RUN_SLOW,
                          reason='set OBSCLADE_RUN_SLOW to run')

__all__ = ['RUN_SLOW', 'slow', 'MonteCarloCase', 'assert_report']


def assert_report(report):
    """Fail with every failing gating row in the message."""
    failed = [row for row in report.rows if row.gating and not row.passed]
    msg = '\n'.join(
        f'{row.statistic} ({row.target}): exact {row.exact:.8g}, '
        f'estimate {row.estimate:.8g} +- {row.stderr:.3g}, z = {row.z:.3g}'
        for row in failed)
    assert report.passed, msg


@slow
class MonteCarloCase:
    """Base class for Monte Carlo acceptance cases.

    Subclasses set ``spec``, ``n``, ``theta`` and ``replicates``;
    ``kind`` picks the full pipeline, the fast samplers, or the full
    pipeline reduced to leaf averages (large ``n``).

    """
    spec = None
    n = None
    theta = 2.0
    replicates = 100000
    kind = 'fast'
    seed = 20231
    j_max = 2
    k_max = 2

    def setup_class(self):
        self.rates = get_rate_table(self.spec, max(self.n, self.k_max + 1))
        self.results = run_replicates(
            self.kind, self.n, self.spec, self.theta, self.replicates,
            seed=self.seed, threads=conf.threads,
            powers=max(self.j_max, self.k_max))
        if self.kind == 'fast':
            self.mc = MonteCarloSummary.from_fast(
                self.results, self.n, j_max=self.j_max, k_max=self.k_max)
        elif self.kind == 'leaf_powers':
            self.mc = MonteCarloSummary.from_leaf_powers(
                self.results, self.n, j_max=self.j_max, k_max=self.k_max)
        else:
            self.mc = MonteCarloSummary.from_full(
                self.results, j_max=self.j_max, k_max=self.k_max)

    def compare(self, exact, **kwargs):
        report = compare(exact, self.mc, **kwargs)
        assert_report(report)
        return report

    def test_ranges(self):
        if self.kind == 'fast':
            draws = np.array(self.results)
            assert np.all((draws[:, 0] >= 2) & (draws[:, 0] <= self.n))
            assert np.all((draws[:, 1] >= 1) & (draws[:, 1] <= self.n))
        elif self.kind == 'leaf_powers':
            means = np.array(self.results)[:, 0]
            assert np.all((means >= 2) & (means <= self.n))
        else:
            for stats in self.results:
                stats.validate()
