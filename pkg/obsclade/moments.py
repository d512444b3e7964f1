# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles exact finite-n moments of ``X_n`` and ``O_n``.

``X_n`` is the size of the block of leaf 1 when an independent
exponential clock of rate ``theta / 2``, started at time 0, rings.
``O_n`` is the size of the minimal observable clade of leaf 1.

Both satisfy first-step recursions over the size ``k`` of the first
merger. Writing ``s = theta / 2`` and
``p_{n,k} = C(n, k) lambda_{n,k} / lambda_n``:

* leaf 1 takes part in the merger with probability ``k / n``; its block
  then has size ``k`` among ``n - k + 1`` blocks;
* otherwise, the merged block joins the clade of leaf 1 with probability
  ``(Y - 1) / (n - k)``, ``Y`` being the number of the ``n - k + 1``
  blocks in that clade.

"""
# STDLIB
import math
from fractions import Fraction

# THIRD-PARTY
import numpy as np
from scipy.special import comb

# ASTROPY
from astropy import log
from astropy.table import MaskedColumn, Table

# LOCAL
from obsclade import exceptions
from obsclade.config import conf
from obsclade.measure import Kingman

__all__ = ['merge_coefficients', 'MomentTable', 'moments_X', 'moments_O',
           'compute_moments', 'moments_exact', 'kingman_moments',
           'moments_X_printed']


def merge_coefficients(i, j, k):
    """Expansion coefficients of ``(k - 1 + Y)**j`` in powers of ``Y``.

    Parameters
    ----------
    i, j : int
        Power and exponent, ``0 <= i <= j``.

    k : int
        Merger size, ``k >= 2``.

    Returns
    -------
    a, b : float
        ``a = C(j, i) (k - 1)**(j - i)`` and ``b = a_{i-1} - a_i`` with
        ``a_{-1} = 0``.

    """
    if not (0 <= i <= j and k >= 2):
        raise exceptions.PreconditionError(
            f'Need 0 <= i <= j and k >= 2, got i={i}, j={j}, k={k}.')
    a = comb(j, i, exact=True) * (k - 1) ** (j - i)
    a_prev = 0 if i == 0 else comb(j, i - 1, exact=True) * (k - 1) ** (
        j - i + 1)
    return float(a), float(a_prev - a)


def _coefficient_arrays(j, ks):
    """``a`` and ``b`` of :func:`merge_coefficients` for all ``i <= j``,
    vectorized over merger sizes. Shapes are ``(j + 1, len(ks))``."""
    ii = np.arange(j + 1)[:, None]
    a = comb(j, ii) * (ks[None, :] - 1.0) ** (j - ii)
    a_prev = np.vstack([np.zeros((1, ks.size)), a[:-1]])
    return a, a_prev - a


class MomentTable:
    """Moments ``E(X_m^j)`` and ``E(O_m^j)`` for ``m <= n_max``,
    ``j <= j_max``.

    Rows are indexed by ``m`` and columns by the exponent. Exponent 0 is
    1 wherever the row is defined. ``X`` is defined from ``m = 1`` and
    ``O`` from ``m = 2``; undefined or not yet computed cells are NaN.

    Parameters
    ----------
    n_max, j_max : int

    theta : float or `~fractions.Fraction`

    spec : `~obsclade.measure.LambdaMeasure`

    exact : bool
        Cells hold `~fractions.Fraction` instead of float.

    """
    def __init__(self, n_max, j_max, theta, spec, exact=False):
        self.n_max = n_max
        self.j_max = j_max
        self.theta = theta
        self.spec = spec
        self.exact = exact
        shape = (n_max + 1, j_max + 1)
        if exact:
            self.X = np.full(shape, np.nan, dtype=object)
            self.O = np.full(shape, np.nan, dtype=object)  # noqa: E741
        else:
            self.X = np.full(shape, np.nan)
            self.O = np.full(shape, np.nan)  # noqa: E741

    def __repr__(self):
        return (f'MomentTable(n_max={self.n_max}, j_max={self.j_max}, '
                f'theta={self.theta}, spec={self.spec!r})')

    def as_float(self):
        """``(X, O)`` as float arrays."""
        return self.X.astype(np.float64), self.O.astype(np.float64)

    def ex(self, m, j=1):
        """``E(X_m^j)`` as float."""
        return float(self.X[m, j])

    def eo(self, m, j=1):
        """``E(O_m^j)`` as float."""
        return float(self.O[m, j])

    @property
    def has_O(self):
        """Whether the O part is computed."""
        return self.n_max >= 2 and not np.isnan(float(self.O[2, 1]))

    def validate(self, rtol=1e-12):
        """Check bounds, Jensen's inequality and exponent monotonicity.

        Parameters
        ----------
        rtol : float
            Relative slack for the comparisons.

        Raises
        ------
        obsclade.exceptions.StructuralError
            A cell violates an invariant.

        """
        X, O = self.as_float()  # noqa: E741
        ms = np.arange(self.n_max + 1, dtype=np.float64)

        def check(ok, what, rows):
            bad = rows[~ok]
            if bad.size:
                raise exceptions.StructuralError(
                    f'{what} violated for m={bad.tolist()} in {self!r}.')

        rows = np.arange(1, self.n_max + 1)
        x1 = X[rows, 1]
        slack = rtol * ms[rows]
        check((x1 >= 1 - slack) & (x1 <= ms[rows] + slack),
              '1 <= E(X_m) <= m', rows)
        if self.j_max >= 2:
            check(X[rows, 2] >= x1 ** 2 * (1 - rtol), 'Jensen for X', rows)

        if self.has_O:
            rows = np.arange(2, self.n_max + 1)
            o1 = O[rows, 1]
            slack = rtol * ms[rows]
            check((o1 >= 2 - slack) & (o1 <= ms[rows] + slack),
                  '2 <= E(O_m) <= m', rows)
            if self.j_max >= 2:
                check(O[rows, 2] >= o1 ** 2 * (1 - rtol), 'Jensen for O',
                      rows)
            for j in range(2, self.j_max + 1):
                check(O[rows, j] >= O[rows, j - 1] * (1 - rtol),
                      f'Exponent monotonicity at j={j}', rows)

    def targets(self, m):
        """Comparison targets for sample size ``m``.

        Returns
        -------
        targets : dict
            Maps ``E[X^j]`` and, where defined, ``E[O^j]`` to floats.

        """
        out = {}
        for j in range(1, self.j_max + 1):
            out[f'E[X^{j}]'] = self.ex(m, j)
        if m >= 2 and self.has_O:
            for j in range(1, self.j_max + 1):
                out[f'E[O^{j}]'] = self.eo(m, j)
        return out

    def to_table(self, n=None, oracle=None):
        """Long-format table with columns ``m, exponent, EX, EO``.

        Parameters
        ----------
        n : int or `None`
            Largest ``m``. Default is ``n_max``.

        oracle : dict or `None`
            Maps ``m`` to arrays ``(EX, EO)`` indexed by exponent. Adds
            masked columns ``EX_oracle`` and ``EO_oracle``.

        Returns
        -------
        tab : `~astropy.table.Table`
            ``EO`` is masked for ``m = 1``.

        """
        if n is None:
            n = self.n_max
        X, O = self.as_float()  # noqa: E741
        ms = np.repeat(np.arange(1, n + 1), self.j_max)
        js = np.tile(np.arange(1, self.j_max + 1), n)
        tab = Table([ms, js], names=('m', 'exponent'))
        tab['EX'] = X[ms, js]
        tab['EO'] = MaskedColumn(O[ms, js], mask=np.isnan(O[ms, js]))

        if oracle is not None:
            ex_o = np.full(ms.size, np.nan)
            eo_o = np.full(ms.size, np.nan)
            for row, (m, j) in enumerate(zip(ms, js)):
                if m in oracle:
                    ex_o[row] = oracle[m][0][j]
                    eo_o[row] = oracle[m][1][j]
            tab['EX_oracle'] = MaskedColumn(ex_o, mask=np.isnan(ex_o))
            tab['EO_oracle'] = MaskedColumn(eo_o, mask=np.isnan(eo_o))

        return tab


def _check_args(n_max, j_max, theta, rates, n_min):
    if not n_max >= n_min:
        raise exceptions.PreconditionError(
            f'n_max must be at least {n_min}, got {n_max}.')
    if not j_max >= 1:
        raise exceptions.PreconditionError(
            f'j_max must be at least 1, got {j_max}.')
    if not theta > 0:
        raise exceptions.PreconditionError(
            f'theta must be positive, got {theta}.')
    if n_max >= 2 and rates.n_max < n_max:
        raise exceptions.PreconditionError(
            f'{rates!r} does not cover n_max={n_max}.')


def moments_X(n_max, j_max, theta, rates):
    """Moments of ``X_m`` for ``m <= n_max`` by first-step analysis.

    ``E(X_1^j) = 1``; for ``m >= 2``,

    .. math::

        E(X_m^j) = \\frac{s}{s + \\lambda_m} + \\frac{\\lambda_m}{s +
        \\lambda_m} \\sum_k p_{m,k} \\Big[\\frac{k}{m} \\sum_i a_{i,j,k}
        E(X_{m-k+1}^i) + \\frac{1}{m} \\sum_i ((m-k+1) 1_{i=j} + b_{i,j,k})
        E(X_{m-k+1}^i)\\Big]

    where the second bracket term is absent for ``k = m``.

    Parameters
    ----------
    n_max, j_max : int

    theta : float
        Mutation rate.

    rates : `~obsclade.ratetable.RateTable`

    Returns
    -------
    table : `MomentTable`
        X part only.

    """
    _check_args(n_max, j_max, theta, rates, 1)
    table = MomentTable(n_max, j_max, theta, rates.spec)
    X = table.X
    X[1:, 0] = 1.0
    X[1, 1:] = 1.0
    s = 0.5 * theta

    for m in range(2, n_max + 1):
        lam = rates.totals[m]
        p = rates.merger_probabilities(m)
        ks = np.arange(2, m + 1)
        rem = m - ks + 1
        prev = X[rem]
        stay = s / (s + lam)
        go = lam / (s + lam)
        for j in range(1, j_max + 1):
            a, b = _coefficient_arrays(j, ks)
            joined = ks / m * np.einsum('ik,ki->k', a, prev[:, :j + 1])
            coef = b[:, :-1].copy()
            coef[j] += rem[:-1]
            apart = np.einsum('ik,ki->k', coef, prev[:-1, :j + 1]) / m
            terms = p * joined
            terms[:-1] += p[:-1] * apart
            X[m, j] = stay + go * math.fsum(terms)

    log.debug(f'Computed X moments up to n={n_max}, j={j_max}, '
              f'theta={theta} for {rates.spec!r}')
    return table


def moments_O(n_max, j_max, theta, rates, table=None):
    """Moments of ``O_m`` for ``2 <= m <= n_max``.

    ``E(O_2^j) = 2^j``; for ``m >= 3``,

    .. math::

        E(O_m^j) = \\sum_k p_{m,k} \\Big[\\frac{k}{m} \\sum_i a_{i,j,k}
        E(X_{m-k+1}^i) + \\frac{1}{m} 1_{k<m} \\sum_i ((m-k+1) 1_{i=j} +
        b_{i,j,k}) E(O_{m-k+1}^i)\\Big]

    No clock runs before the first merger of leaf 1, hence no
    ``s / (s + lambda_m)`` term.

    Parameters
    ----------
    n_max, j_max : int

    theta : float

    rates : `~obsclade.ratetable.RateTable`

    table : `MomentTable` or `None`
        Table whose X part is already filled; computed if not given.
        It is completed in place.

    Returns
    -------
    table : `MomentTable`

    """
    _check_args(n_max, j_max, theta, rates, 2)
    if table is None:
        table = moments_X(n_max, j_max, theta, rates)
    elif table.n_max < n_max or table.j_max < j_max:
        raise exceptions.PreconditionError(
            f'{table!r} does not cover n_max={n_max}, j_max={j_max}.')

    X = table.X
    O = table.O  # noqa: E741
    O[2:, 0] = 1.0
    O[2, 1:] = 2.0 ** np.arange(1, table.j_max + 1)

    for m in range(3, n_max + 1):
        p = rates.merger_probabilities(m)
        ks = np.arange(2, m + 1)
        rem = m - ks + 1
        xprev = X[rem]
        oprev = O[rem[:-1]]
        for j in range(1, j_max + 1):
            a, b = _coefficient_arrays(j, ks)
            joined = ks / m * np.einsum('ik,ki->k', a, xprev[:, :j + 1])
            coef = b[:, :-1].copy()
            coef[j] += rem[:-1]
            apart = np.einsum('ik,ki->k', coef, oprev[:, :j + 1]) / m
            terms = p * joined
            terms[:-1] += p[:-1] * apart
            O[m, j] = math.fsum(terms)

    log.debug(f'Computed O moments up to n={n_max}, j={j_max}, '
              f'theta={theta} for {rates.spec!r}')
    return table


def compute_moments(n_max, j_max, theta, rates):
    """Full `MomentTable`: X part, then O part."""
    return moments_O(n_max, j_max, theta, rates,
                     table=moments_X(n_max, j_max, theta, rates))


def moments_exact(n_max, j_max, theta, spec):
    """Same recursions as :func:`compute_moments` in rational arithmetic.

    Parameters
    ----------
    n_max : int
        At most ``conf.exact_max_n``.

    j_max : int

    theta : float, int or `~fractions.Fraction`
        Converted exactly to a fraction.

    spec : `~obsclade.measure.LambdaMeasure`
        Must provide rational rates (Kingman, Uniform, Dirac).

    Returns
    -------
    table : `MomentTable`
        With ``exact=True``.

    Raises
    ------
    obsclade.exceptions.UnsupportedMeasure
        The measure has no rational rates.

    """
    if n_max > conf.exact_max_n:
        raise exceptions.PreconditionError(
            f'Rational moments are limited to n <= {conf.exact_max_n}, '
            f'got {n_max}.')
    if not (n_max >= 2 and j_max >= 1 and theta > 0):
        raise exceptions.PreconditionError(
            f'Need n_max >= 2, j_max >= 1 and theta > 0, got {n_max}, '
            f'{j_max}, {theta}.')

    s = Fraction(theta) / 2
    table = MomentTable(n_max, j_max, Fraction(theta), spec, exact=True)
    X = table.X
    O = table.O  # noqa: E741
    for m in range(1, n_max + 1):
        X[m, 0] = Fraction(1)
        if m >= 2:
            O[m, 0] = Fraction(1)
    for j in range(1, j_max + 1):
        X[1, j] = Fraction(1)
        O[2, j] = Fraction(2 ** j)

    def coef(i, j, k):
        a = math.comb(j, i) * (k - 1) ** (j - i)
        a_prev = 0 if i == 0 else math.comb(j, i - 1) * (k - 1) ** (j - i + 1)
        return a, a_prev - a

    for m in range(2, n_max + 1):
        weights = {k: math.comb(m, k) * spec.lambda_bk_exact(m, k)
                   for k in range(2, m + 1)}
        lam = sum(weights.values())
        for j in range(1, j_max + 1):
            sum_x = Fraction(0)
            sum_o = Fraction(0)
            for k, w in weights.items():
                if w == 0:
                    continue
                r = m - k + 1
                ab = [coef(i, j, k) for i in range(j + 1)]
                joined = Fraction(k, m) * sum(
                    ab[i][0] * X[r, i] for i in range(j + 1))
                sum_x += w * joined
                sum_o += w * joined
                if k < m:
                    apart_x = sum(((r if i == j else 0) + ab[i][1]) * X[r, i]
                                  for i in range(j + 1))
                    sum_x += w * Fraction(apart_x) / m
                    if m >= 3:
                        apart_o = sum(
                            ((r if i == j else 0) + ab[i][1]) * O[r, i]
                            for i in range(j + 1))
                        sum_o += w * Fraction(apart_o) / m
            X[m, j] = (s + sum_x) / (s + lam)
            if m >= 3:
                O[m, j] = sum_o / lam

    return table


def kingman_moments(n_max, theta):
    """First two moments of ``X_m`` and ``O_m`` under Kingman's
    coalescent, by the binary-merger forms of the recursions.

    With ``s = theta / 2`` and ``c = C(m, 2)``:

    * ``E(X_m) = s/(s+c) + c/(s+c) ((m+1)/m E(X_{m-1}) + 1/m)``
    * ``E(X_m^2) = s/(s+c) + c/(s+c) ((m+2)/m E(X_{m-1}^2)
      + 3/m E(X_{m-1}) + 1/m)``
    * ``E(O_m) = 2/m (1 + E(X_{m-1})) - 1/m + (m-1)/m E(O_{m-1})``
    * ``E(O_m^2) = 2/m (1 + 2 E(X_{m-1}) + E(X_{m-1}^2)) - 1/m
      - 1/m E(O_{m-1}) + E(O_{m-1}^2)``

    Returns
    -------
    table : `MomentTable`
        With ``j_max = 2``.

    """
    if not (n_max >= 2 and theta > 0):
        raise exceptions.PreconditionError(
            f'Need n_max >= 2 and theta > 0, got {n_max}, {theta}.')

    table = MomentTable(n_max, 2, theta, Kingman())
    X = table.X
    O = table.O  # noqa: E741
    s = 0.5 * theta
    X[1:, 0] = 1.0
    X[1, 1:] = 1.0
    O[2:, 0] = 1.0
    O[2, 1:] = (2.0, 4.0)

    for m in range(2, n_max + 1):
        c = m * (m - 1) / 2
        stay = s / (s + c)
        go = c / (s + c)
        x1, x2 = X[m - 1, 1], X[m - 1, 2]
        X[m, 1] = stay + go * ((m + 1) / m * x1 + 1 / m)
        X[m, 2] = stay + go * ((m + 2) / m * x2 + 3 / m * x1 + 1 / m)
        if m >= 3:
            o1, o2 = O[m - 1, 1], O[m - 1, 2]
            O[m, 1] = 2 / m * (1 + x1) - 1 / m + (m - 1) / m * o1
            O[m, 2] = (2 / m * (1 + 2 * x1 + x2) - 1 / m - o1 / m + o2)

    return table


def moments_X_printed(n_max, j_max, theta, rates):
    """``E(X_m^j)`` from the commonly printed form of the X recursion.

    That form takes the chance that the merged block joins the block of
    leaf 1 as ``Y / (m - k + 1)`` whether or not leaf 1 took part in the
    merger. It disagrees with the competing-clocks definition of
    ``X_m`` from ``m = 3`` on and is kept only to quantify the
    discrepancy in errata reports.

    Returns
    -------
    X : ndarray
        Shape ``(n_max + 1, j_max + 1)``, NaN in row 0.

    """
    _check_args(n_max, j_max, theta, rates, 1)
    X = np.full((n_max + 1, j_max + 1), np.nan)
    X[1:, 0] = 1.0
    X[1, 1:] = 1.0
    s = 0.5 * theta

    for m in range(2, n_max + 1):
        lam = rates.totals[m]
        p = rates.merger_probabilities(m)
        ks = np.arange(2, m + 1)
        rem = m - ks + 1
        prev = X[rem]
        for j in range(1, j_max + 1):
            a, _ = _coefficient_arrays(j, ks)
            extra = np.einsum('ik,ki->k', a[:j], prev[:, 1:j + 1]) / rem
            terms = p * (prev[:, j] + extra)
            X[m, j] = s / (s + lam) + lam / (s + lam) * math.fsum(terms)

    return X
