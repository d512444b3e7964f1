# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Monte Carlo means at moderate n against exact finite-n moments."""

# LOCAL
from obsclade.measure import BetaMeasure, Dirac, Kingman, Uniform
from obsclade.moments import compute_moments
from obsclade.validation.utils import MonteCarloCase


class TestKingman20(MonteCarloCase):
    spec = Kingman()
    n = 20

    def test_moments(self):
        table = compute_moments(self.n, self.j_max, self.theta, self.rates)
        self.compare(table, n=self.n)


class TestBSC20(TestKingman20):
    spec = Uniform()


class TestDirac20(TestKingman20):
    spec = Dirac(0.5)
    theta = 0.5


class TestBeta20(TestKingman20):
    spec = BetaMeasure(0.5, 1.5)
    theta = 10.0


class TestBSC20Full(MonteCarloCase):
    """Leaf-averaged moments of the full pipeline."""
    spec = Uniform()
    n = 20
    kind = 'full'
    replicates = 20000

    def test_moments(self):
        table = compute_moments(self.n, self.j_max, self.theta, self.rates)
        targets = {key: val for key, val in table.targets(self.n).items()
                   if key in self.mc}
        self.compare(targets)
