# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Test report.py module."""

# THIRD-PARTY
import numpy as np
import pytest

# ASTROPY
from astropy.utils.exceptions import AstropyUserWarning

# LOCAL
from obsclade import exceptions, report
from obsclade.asymptotics import LimitMomentResult
from obsclade.measure import Dirac, Kingman
from obsclade.moments import compute_moments
from obsclade.ratetable import get_rate_table
from obsclade.report import ComparisonReport, ComparisonRow
from obsclade.samplers import MonteCarloSummary


def _summary(**values):
    """Keyword names stand in for ids: O1 -> E[O^1], S2 -> E[(O/n)^2]."""
    names = {'O1': 'E[O^1]', 'O2': 'E[O^2]', 'S1': 'E[(O/n)^1]',
             'S2': 'E[(O/n)^2]', 'X1': 'E[X^1]', 'X2': 'E[X^2]'}
    mc = MonteCarloSummary()
    for key, vals in values.items():
        mc.add(names[key], vals)
    return mc


class TestComparisonRow:
    def test_pass(self):
        row = ComparisonRow('E[O^1]', 3, 3.02, 0.01)
        assert row.passed
        assert row.verdict == 'pass'
        assert row.z == pytest.approx(2)
        assert row.note == ''

    def test_fail(self):
        row = ComparisonRow('E[O^1]', 1, 1.1, 0.01)
        assert not row.passed
        assert row.verdict == 'fail'

    def test_slack(self):
        row = ComparisonRow('E[(O/n)^1]', 1, 1.1, 0.01, slack=0.1)
        assert row.passed

    def test_threshold(self):
        assert not ComparisonRow('E[O^1]', 3, 3.02, 0.01,
                                 z_threshold=1).passed

    def test_degenerate(self):
        row = ComparisonRow('E[O^1]', 2, 2, 0)
        assert row.passed
        assert row.z == 0
        row = ComparisonRow('E[O^1]', 2, 3, 0, note='n = 2')
        assert not row.passed
        assert row.z == np.inf
        assert row.note == 'n = 2; degenerate variance'
        d = row.to_dict()
        assert d['z'] is None
        assert d['verdict'] == 'fail'
        assert d['estimate'] == 3


class TestComparisonReport:
    def test_gating(self):
        rows = [ComparisonRow('a', 1, 1, 0.1),
                ComparisonRow('b', 1, 5, 0.1, gating=False)]
        rep = ComparisonReport(rows)
        assert rep.passed
        assert rep.exit_code == 0
        rep.extend(ComparisonReport([ComparisonRow('c', 1, 5, 0.1)],
                                    ['extra']))
        assert not rep.passed
        assert rep.exit_code == 2
        assert rep.notes == ['extra']
        assert len(rep.rows) == 3

    def test_table(self):
        rep = ComparisonReport([ComparisonRow('a', 1, 1.05, 0.1)])
        t = rep.to_table()
        assert t.colnames[:3] == ['statistic', 'target', 'exact']
        assert t['verdict'][0] == 'pass'
        assert len(ComparisonReport().to_table()) == 0

    def test_dict(self):
        d = ComparisonReport([ComparisonRow('a', 1, 1, 0.1)], ['x']).to_dict()
        assert d['passed'] is True
        assert d['notes'] == ['x']
        assert d['rows'][0]['statistic'] == 'a'


class TestCompare:
    def test_dict(self):
        mc = _summary(O1=[2, 3, 4])
        rep = report.compare({'E[O^1]': 3.0}, mc)
        assert rep.passed
        assert rep.rows[0].target == 'exact'
        assert rep.rows[0].slack == 0

    def test_moment_table(self):
        """Draws centred on E(O_2^j) = 2^j and, for theta = 1, on
        E(X_2) = 5/3 and E(X_2^2) = 3."""
        table = compute_moments(2, 2, 1.0, get_rate_table(Kingman(), 2))
        mc = _summary(O1=[1.9, 2.0, 2.1], O2=[3.9, 4.0, 4.1], X1=[1, 2, 2],
                      X2=[1, 4, 4])
        rep = report.compare(table, mc, n=2)
        assert [row.statistic for row in rep.rows] == [
            'E[O^1]', 'E[O^2]', 'E[X^1]', 'E[X^2]']
        assert rep.passed

    def test_moment_table_needs_n(self):
        table = compute_moments(2, 1, 1.0, get_rate_table(Kingman(), 2))
        with pytest.raises(exceptions.PreconditionError):
            report.compare(table, _summary(O1=[2]))

    def test_limit(self):
        res = LimitMomentResult(1, 0.5, 'explicit')
        mc = _summary(S1=[0.505, 0.505])
        rep = report.compare(res, mc)
        assert rep.rows[0].target == 'limit'
        assert rep.rows[0].slack == pytest.approx(0.01)
        assert rep.passed
        assert not report.compare([res], mc, slack=0).passed

    def test_missing(self):
        with pytest.raises(exceptions.StructuralError, match='E\\[O\\^2\\]'):
            report.compare({'E[O^1]': 2, 'E[O^2]': 4}, _summary(O1=[2]))


class TestAdjudicate:
    def test_mixture_wins(self):
        vals = np.repeat([5 / 12 - 0.001, 5 / 12 + 0.001], 50)
        rep = report.adjudicate_beta_law(_summary(S2=vals), 2.0, slack=0)
        assert [row.target for row in rep.rows] == ['mixture', 'beta_law']
        assert rep.rows[0].passed
        assert not rep.rows[1].passed
        assert not rep.rows[1].gating
        assert rep.passed
        assert 'supports the mixture' in rep.notes[0]

    def test_beta_wins(self):
        vals = np.repeat([0.374, 0.376], 50)
        rep = report.adjudicate_beta_law(_summary(S2=vals), 2.0, slack=0)
        assert not rep.passed
        assert 'supports the beta_law' in rep.notes[0]

    def test_both(self):
        vals = np.repeat([0.0, 0.8], 5)
        with pytest.warns(AstropyUserWarning, match='compatible with both'):
            rep = report.adjudicate_beta_law(_summary(S2=vals), 2.0)
        assert rep.passed

    def test_neither(self):
        vals = np.repeat([0.9, 0.9002], 50)
        with pytest.warns(AstropyUserWarning, match='incompatible'):
            rep = report.adjudicate_beta_law(_summary(S2=vals), 2.0)
        assert not rep.passed


class TestErrata:
    def test_x_recursion(self):
        notes = report.errata_notes(['x_recursion'], theta=2.0,
                                    rates=get_rate_table(Kingman(), 3))
        assert 'E(X_3) = 2,' in notes[0]
        assert '1.9375' in notes[0]

    def test_dust(self):
        notes = report.errata_notes(['dust_constant'], theta=2.0,
                                    spec=Dirac(0.5))
        assert '0.9 instead of 0.75' in notes[0]

    def test_beta_law(self):
        notes = report.errata_notes(['beta_law'], theta=2.0)
        assert '0.416666666667' in notes[0]
        assert '0.375' in notes[0]

    def test_all(self):
        notes = report.errata_notes(report.ERRATA_TOPICS, theta=2.0,
                                    spec=Dirac(0.5),
                                    rates=get_rate_table(Kingman(), 3))
        assert len(notes) == 4
        assert 'C(n-1, k)' in notes[0]

    def test_unknown(self):
        with pytest.raises(exceptions.PreconditionError):
            report.errata_notes(['typo'])
