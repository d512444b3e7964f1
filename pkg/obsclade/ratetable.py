# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles tabulated merger rates up to a maximum block count."""

# STDLIB
import numbers

# THIRD-PARTY
import numpy as np
from scipy.special import logsumexp

# ASTROPY
from astropy import log
from astropy.table import Table

# LOCAL
from obsclade import exceptions
from obsclade.measure import CustomDensity, log_binom

__all__ = ['reset_cache', 'RateTable', 'get_rate_table']

_CACHE = {}  # Stores rate tables per measure to avoid rebuilding them.
_CACHE_SIZE = 16  # Least recently used tables beyond this are dropped.


def reset_cache():
    """Empty the rate table cache."""
    global _CACHE
    _CACHE.clear()


class RateTable:
    """Merger rates of a measure for all block counts up to ``n_max``.

    The table is built eagerly and must not be modified afterwards.
    For ``2 <= b <= n_max``:

    * ``rates[b][k - 2]`` is the rate at which a given ``k`` of ``b``
      blocks merge.
    * ``totals[b]`` is the total merger rate with ``b`` blocks.
    * ``log_rates[b]`` holds the same rates as natural logs, from which
      totals and merger-size probabilities are derived.
    * ``cdf[b][k - 2]`` is the probability that the next merger
      involves at most ``k`` blocks.

    Custom densities are integrated only for ``b = n_max``; lower rows
    follow from ``lambda_{b,k} = lambda_{b+1,k} + lambda_{b+1,k+1}``.

    Parameters
    ----------
    spec : `~obsclade.measure.LambdaMeasure`
        The measure.

    n_max : int
        Largest block count.

    """
    def __init__(self, spec, n_max):
        if not (isinstance(n_max, numbers.Integral) and n_max >= 2):
            raise exceptions.PreconditionError(
                f'n_max must be an integer >= 2, got {n_max!r}.')

        self.spec = spec
        self.n_max = int(n_max)
        self.rates = [None, None]
        self.log_rates = [None, None]
        self.totals = np.full(self.n_max + 1, np.nan)
        self.log_totals = np.full(self.n_max + 1, np.nan)
        self.cdf = [None, None]

        if isinstance(spec, CustomDensity):
            rows = self._rows_by_recursion()
        else:
            rows = (spec.log_rates(b) for b in range(2, self.n_max + 1))

        for b, row in zip(range(2, self.n_max + 1), rows):
            self._add_row(b, row)

        log.debug(f'Built rate table for {spec!r} up to n_max={n_max}')

    def _rows_by_recursion(self):
        """Log rows ``b = 2, ..., n_max`` from the integrated top row."""
        rows = [self.spec.log_rates(self.n_max)]
        for _ in range(self.n_max - 2):
            upper = rows[-1]
            rows.append(np.logaddexp(upper[:-1], upper[1:]))
        return reversed(rows)

    def _add_row(self, b, log_row):
        log_row = np.asarray(log_row, dtype=np.float64)
        log_w = log_binom(b, np.arange(2, b + 1)) + log_row
        log_total = logsumexp(log_w)
        if not np.isfinite(log_total):
            raise exceptions.PreconditionError(
                f'{self.spec!r} has no mergers with b={b} blocks.')

        cdf = np.cumsum(np.exp(log_w - log_total))
        cdf[-1] = 1.0

        self.log_rates.append(log_row)
        self.rates.append(np.exp(log_row))
        self.cdf.append(cdf)
        self.log_totals[b] = log_total
        self.totals[b] = np.exp(log_total)

    def __repr__(self):
        return f'RateTable({self.spec!r}, n_max={self.n_max})'

    def _check_b(self, b):
        if not 2 <= b <= self.n_max:
            raise exceptions.PreconditionError(
                f'Block count {b} outside rate table range '
                f'[2, {self.n_max}].')

    def rate(self, b, k):
        """Tabulated ``lambda_{b,k}``."""
        self._check_b(b)
        if not 2 <= k <= b:
            raise exceptions.PreconditionError(
                f'Merger rate needs 2 <= k <= b, got b={b}, k={k}.')
        return float(self.rates[b][k - 2])

    def total(self, b):
        """Tabulated ``lambda_b``."""
        self._check_b(b)
        return float(self.totals[b])

    def merger_probabilities(self, b):
        """Probabilities ``C(b, k) lambda_{b,k} / lambda_b``, k = 2..b."""
        return np.exp(self.log_merger_probabilities(b))

    def log_merger_probabilities(self, b):
        """Natural log of :meth:`merger_probabilities`, without
        cancellation."""
        self._check_b(b)
        return (log_binom(b, np.arange(2, b + 1)) + self.log_rates[b] -
                self.log_totals[b])

    def sample_merger_size(self, b, u):
        """Merger size for a uniform draw ``u`` in ``[0, 1)``."""
        k = 2 + int(np.searchsorted(self.cdf[b], u, side='right'))
        return min(k, b)

    def to_table(self, n=None):
        """Long-format table with columns ``b, k, lambda_bk, lambda_b``.

        Parameters
        ----------
        n : int or `None`
            Largest block count to include. Default is ``n_max``.

        Returns
        -------
        tab : `~astropy.table.Table`

        """
        if n is None:
            n = self.n_max
        self._check_b(n)
        bs = np.concatenate([np.full(b - 1, b) for b in range(2, n + 1)])
        ks = np.concatenate([np.arange(2, b + 1) for b in range(2, n + 1)])
        lam = np.concatenate(self.rates[2:n + 1])
        tot = self.totals[bs]
        return Table([bs, ks, lam, tot],
                     names=('b', 'k', 'lambda_bk', 'lambda_b'))


def get_rate_table(spec, n_max):
    """Return a rate table covering ``n_max`` for the given measure.

    It is built once and then cached until the cache is cleared
    explicitly using :func:`reset_cache`, or until
    ``_CACHE_SIZE`` other measures have been used since. A cached table with
    a larger ``n_max`` is reused.

    Parameters
    ----------
    spec : `~obsclade.measure.LambdaMeasure`
        The measure.

    n_max : int
        Largest block count needed.

    Returns
    -------
    rates : `RateTable`

    """
    tab = _CACHE.pop(spec, None)
    if tab is None or tab.n_max < n_max:
        tab = RateTable(spec, n_max)
    _CACHE[spec] = tab
    while len(_CACHE) > _CACHE_SIZE:
        del _CACHE[next(iter(_CACHE))]
    return tab
