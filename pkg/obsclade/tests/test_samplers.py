# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Test samplers.py module."""

# THIRD-PARTY
import numpy as np
import pytest
from scipy.stats import chi2_contingency

# ASTROPY
from astropy.utils.exceptions import AstropyUserWarning

# LOCAL
from obsclade import exceptions, samplers
from obsclade.genealogy import CladeStatsVector
from obsclade.measure import CustomDensity, Dirac, Kingman, Uniform
from obsclade.moments import compute_moments
from obsclade.ratetable import get_rate_table

# z-score band and smallest p-value for the statistical checks below;
# seeds are fixed
Z = 5
P_MIN = 1e-3


@pytest.mark.parametrize('spec', [Kingman(), Uniform(), Dirac(0.5)])
def test_ranges(spec):
    rates = get_rate_table(spec, 20)
    for seed in range(50):
        o1 = samplers.sample_O1(20, rates, 1.0, seed)
        x = samplers.sample_X(20, rates, 1.0, seed)
        assert 2 <= o1 <= 20
        assert 1 <= x <= 20


def test_trivial_sizes():
    rates = get_rate_table(Kingman(), 2)
    assert samplers.sample_X(1, rates, 2.0, 0) == 1
    assert all(samplers.sample_O1(2, rates, 2.0, s) == 2 for s in range(10))


def test_deterministic():
    rates = get_rate_table(Uniform(), 30)
    a = [samplers.sample_fast(30, rates, 2.0, 7, r) for r in range(20)]
    b = [samplers.sample_fast(30, rates, 2.0, 7, r) for r in range(20)]
    assert a == b


def test_bad_args():
    rates = get_rate_table(Kingman(), 5)
    with pytest.raises(exceptions.PreconditionError):
        samplers.sample_O1(6, rates, 1.0, 0)
    with pytest.raises(exceptions.PreconditionError):
        samplers.sample_O1(1, rates, 1.0, 0)
    with pytest.raises(exceptions.PreconditionError):
        samplers.sample_X(5, rates, 0.0, 0)
    with pytest.raises(exceptions.PreconditionError):
        samplers.sample_X(5, rates, 1.0, 0, growth_rate=-0.5)


@pytest.mark.parametrize(
    ('spec', 'n', 'theta'),
    [(Kingman(), 5, 2.0),
     (Uniform(), 6, 2.0),
     (Dirac(0.5), 6, 0.5)])
def test_fast_against_moments(spec, n, theta):
    """Fast sampler means against exact finite-n moments."""
    rates = get_rate_table(spec, n)
    table = compute_moments(n, 2, theta, rates)
    draws = samplers.run_replicates('fast', n, spec, theta, 20000, seed=1,
                                    threads=1)
    mc = samplers.MonteCarloSummary.from_fast(draws, n)
    for stat_id, exact in table.targets(n).items():
        assert abs(mc.mean(stat_id) - exact) <= Z * mc.stderr(stat_id), \
            stat_id


def test_full_against_moments():
    """Leaf averages of the full pipeline against exact E(O_n^j)."""
    spec = Uniform()
    n = 8
    table = compute_moments(n, 2, 2.0, get_rate_table(spec, n))
    stats = samplers.run_replicates('full', n, spec, 2.0, 5000, seed=3,
                                    threads=1)
    mc = samplers.MonteCarloSummary.from_full(stats)
    for j in (1, 2):
        stat_id = f'E[O^{j}]'
        assert abs(mc.mean(stat_id) - table.eo(n, j)) <= (
            Z * mc.stderr(stat_id))


def test_full_and_fast_agree():
    """Both pipelines estimate the same E(O_n)."""
    spec = Dirac(0.5)
    full = samplers.MonteCarloSummary.from_full(samplers.run_replicates(
        'full', 10, spec, 1.0, 4000, seed=5, threads=1))
    fast = samplers.MonteCarloSummary.from_fast(samplers.run_replicates(
        'fast', 10, spec, 1.0, 4000, seed=5, threads=1), 10)
    diff = full.mean('E[O^1]') - fast.mean('E[O^1]')
    se = np.hypot(full.stderr('E[O^1]'), fast.stderr('E[O^1]'))
    assert abs(diff) <= Z * se


def _contingency(*samples):
    """Counts of each observed value, one row per sample."""
    values = np.unique(np.concatenate(samples))
    return np.array([[np.count_nonzero(s == v) for v in values]
                     for s in samples])


def test_kingman_three_anchor():
    """P(O_3 = 3) = 2/3 for Kingman with theta = 2."""
    rates = get_rate_table(Kingman(), 3)
    draws = np.array([samplers.sample_O1(3, rates, 2.0, s)
                      for s in range(20000)])
    assert set(np.unique(draws)) <= {2, 3}
    p = np.mean(draws == 3)
    assert abs(p - 2 / 3) <= Z * np.sqrt(2 / 9 / draws.size)


def test_full_and_fast_distributions():
    """O_4 of leaf 1 has the same law on {2, 3, 4} in both pipelines."""
    spec = Kingman()
    full = samplers.run_replicates('full', 4, spec, 1.0, 4000, seed=21,
                                   threads=1)
    fast = samplers.run_replicates('fast', 4, spec, 1.0, 4000, seed=22,
                                   threads=1)
    o_full = np.array([stats.O[0] for stats in full])
    o_fast = np.array([o1 for o1, _ in fast])
    counts = _contingency(o_full, o_fast)
    assert counts.shape == (2, 3)
    assert chi2_contingency(counts)[1] > P_MIN


def test_leaf_exchangeability():
    """O_5(i) has the same law for every leaf i.

    Replicate r contributes only leaf r mod 5, so the rows of the
    contingency table are independent.

    """
    n = 5
    stats = samplers.run_replicates('full', n, Uniform(), 1.0, 5000, seed=8,
                                    threads=1)
    by_leaf = [np.array([s.O[i] for s in stats[i::n]]) for i in range(n)]
    assert chi2_contingency(_contingency(*by_leaf))[1] > P_MIN


def test_leaf_powers():
    """Reduced replicates match leaf averages of the full vectors."""
    spec = Dirac(0.5)
    full = samplers.run_replicates('full', 6, spec, 1.0, 10, seed=4,
                                   threads=1)
    reduced = samplers.run_replicates('leaf_powers', 6, spec, 1.0, 10,
                                      seed=4, threads=1, powers=3)
    assert len(reduced) == 10
    for stats, row in zip(full, reduced):
        assert len(row) == 3
        np.testing.assert_allclose(row, [np.mean(stats.O ** p)
                                         for p in (1, 2, 3)])
    a = samplers.MonteCarloSummary.from_full(full)
    b = samplers.MonteCarloSummary.from_leaf_powers(reduced, 6)
    assert a.ids == b.ids
    for stat_id in a.ids:
        assert a.mean(stat_id) == pytest.approx(b.mean(stat_id))
        assert a.stderr(stat_id) == pytest.approx(b.stderr(stat_id))


def test_growth_enlarges_clades():
    """Under growth the same mutation clock covers more coalescent time;
    with shared draws every clade is at least as large."""
    rates = get_rate_table(Kingman(), 50)
    plain = np.array([samplers.sample_O1(50, rates, 2.0, s)
                      for s in range(500)])
    grown = np.array([samplers.sample_O1(50, rates, 2.0, s, growth_rate=5.0)
                      for s in range(500)])
    assert np.all(grown >= plain)
    assert grown.mean() > plain.mean()


class TestRunReplicates:
    def test_serial_order(self):
        spec = Uniform()
        rates = get_rate_table(spec, 10)
        out = samplers.run_replicates('fast', 10, spec, 1.0, 12, seed=9,
                                      threads=1)
        assert out == [samplers.sample_fast(10, rates, 1.0, 9, r)
                       for r in range(12)]

    def test_threads_invariance(self):
        spec = Dirac(0.5)
        one = samplers.run_replicates('fast', 10, spec, 1.0, 16, seed=2,
                                      threads=1)
        two = samplers.run_replicates('fast', 10, spec, 1.0, 16, seed=2,
                                      threads=2)
        assert one == two

    def test_unpicklable(self):
        spec = CustomDensity(lambda x: 1.0, 1.0, mu_minus1=np.inf)
        with pytest.warns(AstropyUserWarning, match='serially'):
            out = samplers.run_replicates('fast', 4, spec, 1.0, 3, threads=2)
        assert len(out) == 3

    @pytest.mark.parametrize(
        ('kind', 'replicates'), [('partial', 5), ('fast', 0)])
    def test_bad_args(self, kind, replicates):
        with pytest.raises(exceptions.PreconditionError):
            samplers.run_replicates(kind, 4, Kingman(), 1.0, replicates)

    @pytest.mark.parametrize('powers', [0, 1.5])
    def test_bad_powers(self, powers):
        with pytest.raises(exceptions.PreconditionError):
            samplers.run_replicates('leaf_powers', 4, Kingman(), 1.0, 2,
                                    powers=powers)


class TestMonteCarloSummary:
    def setup_class(self):
        self.fast = samplers.MonteCarloSummary.from_fast(
            [(2, 1), (4, 3), (3, 2)], 4, j_max=2, k_max=1)
        self.full = samplers.MonteCarloSummary.from_full(
            [CladeStatsVector([1, 1], [2, 2], [2, 2]),
             CladeStatsVector([1, 1], [2, 2], [2, 2])], j_max=1, k_max=2)

    def test_ids(self):
        assert self.fast.ids == ['E[(O/n)^1]', 'E[O^1]', 'E[O^2]', 'E[X^1]',
                                 'E[X^2]']
        assert 'E[X^1]' in self.fast
        assert 'E[X^1]' not in self.full

    def test_fast_values(self):
        assert self.fast.mean('E[O^1]') == pytest.approx(3)
        assert self.fast.stderr('E[O^1]') == pytest.approx(1 / np.sqrt(3))
        assert self.fast.mean('E[X^2]') == pytest.approx(14 / 3)
        assert self.fast.mean('E[(O/n)^1]') == pytest.approx(0.75)
        assert self.fast.count('E[O^2]') == 3

    def test_full_values(self):
        assert self.full.mean('E[O^1]') == 2
        assert self.full.stderr('E[O^1]') == 0
        assert self.full.mean('E[(O/n)^2]') == 1

    def test_single_replicate(self):
        mc = samplers.MonteCarloSummary()
        mc.add('E[O^1]', [5])
        assert mc.stderr('E[O^1]') == 0
        mc.add('E[O^1]', [7])
        assert mc.count('E[O^1]') == 2
        assert mc.mean('E[O^1]') == 6

    def test_missing(self):
        with pytest.raises(exceptions.StructuralError):
            self.full.mean('E[X^1]')

    def test_leaf_powers_too_short(self):
        with pytest.raises(exceptions.StructuralError):
            samplers.MonteCarloSummary.from_leaf_powers([(2.0,)], 4, j_max=2)

    def test_table(self):
        t = self.fast.to_table()
        assert t.colnames == ['statistic', 'estimate', 'stderr', 'count']
        assert len(t) == 5
