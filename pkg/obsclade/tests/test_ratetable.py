# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Test ratetable.py module."""

# THIRD-PARTY
import numpy as np
import pytest

# LOCAL
from obsclade import exceptions, ratetable
from obsclade.measure import (BetaMeasure, CustomDensity, Dirac, Kingman,
                              Uniform)


class TestRateTable:
    def setup_class(self):
        self.tab = ratetable.RateTable(Uniform(), 6)

    def test_rates(self):
        np.testing.assert_allclose(self.tab.rates[4], [1 / 3, 1 / 6, 1 / 3])
        assert self.tab.rate(4, 2) == pytest.approx(1 / 3)

    def test_totals(self):
        np.testing.assert_allclose(self.tab.totals[2:], [1, 2, 3, 4, 5])
        assert self.tab.total(3) == pytest.approx(2)

    def test_merger_probabilities(self):
        p = self.tab.merger_probabilities(4)
        np.testing.assert_allclose(p, [2 / 3, 2 / 9, 1 / 9])
        for b in range(2, 7):
            assert self.tab.merger_probabilities(b).sum() == pytest.approx(1)

    @pytest.mark.parametrize(
        ('u', 'k'), [(0, 2), (0.5, 2), (0.7, 3), (0.95, 4), (0.999999, 4)])
    def test_sample_merger_size(self, u, k):
        assert self.tab.sample_merger_size(4, u) == k

    @pytest.mark.parametrize('b', [1, 7])
    def test_out_of_range(self, b):
        with pytest.raises(exceptions.PreconditionError):
            self.tab.total(b)

    def test_bad_k(self):
        with pytest.raises(exceptions.PreconditionError):
            self.tab.rate(4, 5)

    def test_to_table(self):
        t = self.tab.to_table(4)
        assert t.colnames == ['b', 'k', 'lambda_bk', 'lambda_b']
        assert len(t) == 6
        np.testing.assert_array_equal(t['b'], [2, 3, 3, 4, 4, 4])
        np.testing.assert_array_equal(t['k'], [2, 2, 3, 2, 3, 4])
        np.testing.assert_allclose(t['lambda_b'], [1, 2, 2, 3, 3, 3])


def test_kingman_probabilities():
    """Only binary mergers."""
    tab = ratetable.RateTable(Kingman(), 5)
    np.testing.assert_allclose(tab.merger_probabilities(5), [1, 0, 0, 0])
    assert tab.sample_merger_size(5, 0.999) == 2
    assert tab.total(5) == pytest.approx(10)


def test_large_table():
    """Probabilities stay finite where rates underflow."""
    tab = ratetable.RateTable(BetaMeasure(0.5, 1.5), 500)
    p = tab.merger_probabilities(500)
    assert np.all(np.isfinite(p))
    assert p.sum() == pytest.approx(1)


def test_dirac_large_table():
    """Dirac rates 0.5**(b - 2) fall below the float range near b = 1078."""
    tab = ratetable.RateTable(Dirac(0.5), 2000)
    assert tab.total(2000) == pytest.approx(4, rel=1e-10)
    assert tab.rate(2000, 2) == 0
    np.testing.assert_allclose(tab.log_rates[2000][0], -1998 * np.log(2))
    p = tab.merger_probabilities(2000)
    assert p.sum() == pytest.approx(1)
    assert tab.sample_merger_size(2000, 0.5) == 1000


def test_bsc_large_totals():
    """lambda_b = b - 1 with no merger size dropped."""
    tab = ratetable.RateTable(Uniform(), 5000)
    assert tab.totals[5000] == pytest.approx(4999, rel=1e-10)
    assert tab.totals[1234] == pytest.approx(1233, rel=1e-10)
    assert np.all(tab.merger_probabilities(5000) > 0)


def test_custom_recursion():
    """Lower rows of a custom density follow from the top row."""
    spec = CustomDensity(lambda x: 1.0, 1.0, mu_minus1=np.inf)
    tab = ratetable.RateTable(spec, 8)
    ref = ratetable.RateTable(Uniform(), 8)
    for b in range(2, 9):
        np.testing.assert_allclose(tab.rates[b], ref.rates[b], rtol=1e-8)
    np.testing.assert_allclose(tab.totals[2:], ref.totals[2:], rtol=1e-8)


def test_no_mergers():
    spec = CustomDensity(lambda x: 0.0, 1.0, mu_minus1=np.inf)
    with pytest.raises(exceptions.PreconditionError):
        ratetable.RateTable(spec, 3)


@pytest.mark.parametrize('n_max', [1, 2.5])
def test_bad_n_max(n_max):
    with pytest.raises(exceptions.PreconditionError):
        ratetable.RateTable(Kingman(), n_max)


class TestCache:
    def setup_class(self):
        ratetable.reset_cache()

    def teardown_class(self):
        ratetable.reset_cache()

    def test_reuse(self):
        tab = ratetable.get_rate_table(Dirac(0.5), 10)
        assert ratetable.get_rate_table(Dirac(0.5), 5) is tab
        assert ratetable.get_rate_table(Dirac(0.5), 10) is tab

    def test_grow(self):
        small = ratetable.get_rate_table(Dirac(0.25), 4)
        big = ratetable.get_rate_table(Dirac(0.25), 8)
        assert big is not small
        assert big.n_max == 8
        assert ratetable.get_rate_table(Dirac(0.25), 4) is big

    def test_reset(self):
        tab = ratetable.get_rate_table(Kingman(), 3)
        ratetable.reset_cache()
        assert ratetable.get_rate_table(Kingman(), 3) is not tab

    def test_bounded(self):
        """Least recently used measures are dropped first."""
        ratetable.reset_cache()
        first = ratetable.get_rate_table(Dirac(0.5), 3)
        for i in range(ratetable._CACHE_SIZE - 1):
            ratetable.get_rate_table(Dirac(0.01 * (i + 1)), 3)
        assert ratetable.get_rate_table(Dirac(0.5), 3) is first
        ratetable.get_rate_table(Dirac(0.99), 3)
        assert len(ratetable._CACHE) == ratetable._CACHE_SIZE
        assert Dirac(0.01) not in ratetable._CACHE
        assert ratetable.get_rate_table(Dirac(0.5), 3) is first
