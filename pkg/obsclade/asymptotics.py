# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles limits of the moments of ``O_n / n`` as ``n``
grows.

Without dust, ``E(S^k)`` is the Laplace transform at ``theta / 2`` of
the time ``k + 1`` lineages need to find their common ancestor. That
absorption time has CDF ``1 - sum_r a_r exp(-lambda_r t)`` over
``r = 2, ..., k + 1``, so

.. math::

    E(S^k) = 1 - \\sum_{r=2}^{k+1} a_{k+1,r} \\frac{\\theta/2}{\\lambda_r +
    \\theta/2}

With dust, only the mean is available, from the jump chain of the
asymptotic frequency of the block of leaf 1.

"""
# STDLIB
import math
import warnings

# THIRD-PARTY
import numpy as np
from scipy import integrate
from scipy.special import comb, poch

# ASTROPY
from astropy import log
from astropy.utils.exceptions import AstropyUserWarning

# LOCAL
from obsclade import exceptions
from obsclade.config import conf
from obsclade.measure import Kingman

__all__ = ['LimitMomentResult', 'absorption_mixture', 'laplace_absorption',
           'limit_moment_nodust', 'bsc_limit_beta', 'limit_mean_dust',
           'printed_dust_mean', 'limit_moments_growth', 'limit_moments']

_METHODS = ('explicit', 'phase_type', 'dust_series', 'beta_limit',
            'growth_quadrature')


class LimitMomentResult:
    """One limit moment ``E(S^k)``.

    Parameters
    ----------
    k : int
        Exponent.

    value : float
        Moment value, in ``[0, 1]``.

    method : str
        One of ``explicit``, ``phase_type``, ``dust_series``,
        ``beta_limit`` and ``growth_quadrature``.

    a_coefficients, rates : ndarray or `None`
        Absorption mixture used, see :func:`absorption_mixture`.

    extra : dict or `None`
        Secondary values, such as another route to the same number.

    """
    def __init__(self, k, value, method, a_coefficients=None, rates=None,
                 extra=None):
        if method not in _METHODS:
            raise exceptions.PreconditionError(
                f'Unknown method {method!r}, expected one of {_METHODS}.')
        value = float(value)
        if not -1e-12 <= value <= 1 + 1e-12:
            raise exceptions.StructuralError(
                f'Limit moment k={k} evaluated to {value}, outside [0, 1].')
        self.k = k
        self.value = min(max(value, 0.0), 1.0)
        self.method = method
        self.a_coefficients = a_coefficients
        self.rates = rates
        self.extra = extra or {}

    def __repr__(self):
        return (f'LimitMomentResult(k={self.k}, value={self.value:.12g}, '
                f'method={self.method!r})')

    @property
    def statistic_id(self):
        """Identifier used in comparison reports."""
        return f'E[(O/n)^{self.k}]'


def _check_k(k, rates):
    if not k >= 1:
        raise exceptions.PreconditionError(f'k must be >= 1, got {k}.')
    if rates.n_max < k + 1:
        raise exceptions.PreconditionError(
            f'{rates!r} does not cover {k + 1} blocks.')


def absorption_mixture(k, rates):
    """Exponential mixture of the absorption time of ``k + 1`` lineages.

    The block-counting chain jumps from ``b`` to ``b - m + 1`` blocks at
    rate ``C(b, m) lambda_{b,m}``. Its survival function from ``b``
    blocks is ``sum_r c^{(b)}_r exp(-lambda_r t)``, ``r = 2, ..., b``,
    with ``c^{(2)}_2 = 1`` and, for ``r < b``,

    .. math::

        c^{(b)}_r = \\sum_m \\frac{C(b, m) \\lambda_{b,m}}{\\lambda_b -
        \\lambda_r} c^{(b-m+1)}_r

    while ``c^{(b)}_b`` makes the coefficients sum to one.

    Parameters
    ----------
    k : int
        Moment order; the chain starts with ``k + 1`` blocks.

    rates : `~obsclade.ratetable.RateTable`

    Returns
    -------
    lams, coeffs : ndarray
        ``lambda_r`` and ``a_{k+1,r}`` for ``r = 2, ..., k + 1``.

    Raises
    ------
    obsclade.exceptions.DegenerateSpectrum
        Two of the total rates coincide.

    """
    _check_k(k, rates)
    top = k + 1
    lams = rates.totals[2:top + 1].copy()
    for i in range(lams.size):
        close = np.abs(lams[i + 1:] - lams[i]) < (
            conf.collision_rtol * np.maximum(lams[i + 1:], lams[i]))
        if np.any(close):
            r = i + 2
            s = r + 1 + int(np.flatnonzero(close)[0])
            raise exceptions.DegenerateSpectrum(
                f'lambda_{r} = {lams[i]} and lambda_{s} = {lams[s - 2]} '
                f'collide for {rates.spec!r}.')

    # c[b][r - 2] for b = 2..top
    c = {2: np.array([1.0])}
    for b in range(3, top + 1):
        row = np.zeros(b - 1)
        q = comb(b, np.arange(2, b + 1)) * rates.rates[b]
        for m in range(2, b):
            if q[m - 2] == 0:
                continue
            lower = c[b - m + 1]
            row[:lower.size] += q[m - 2] * lower
        row[:-1] /= lams[b - 2] - lams[:b - 2]
        row[-1] = 1.0 - math.fsum(row[:-1])
        c[b] = row

    return lams, c[top]


def laplace_absorption(k, theta, rates):
    """``E(exp(-theta/2 tau))`` for the absorption time ``tau`` of
    ``k + 1`` lineages, by first-step analysis of the block-counting
    chain.

    ``L_1 = 1`` and ``L_b = sum_m C(b, m) lambda_{b,m} L_{b-m+1} /
    (lambda_b + theta/2)``.

    """
    _check_k(k, rates)
    s = 0.5 * theta
    L = [np.nan, 1.0]
    for b in range(2, k + 2):
        ms = np.arange(2, b + 1)
        q = comb(b, ms) * rates.rates[b]
        L.append(math.fsum(q * np.array([L[b - m + 1] for m in ms])) /
                 (rates.totals[b] + s))
    return L[k + 1]


def limit_moment_nodust(k, theta, rates):
    """``E(S^k)`` for a measure without dust.

    For ``k <= 2`` the value is checked against the explicit forms
    ``E(S) = lambda_2 / (lambda_2 + s)`` and
    ``E(S^2) = 1 - 3/2 s / (lambda_2 + s) + 1/2 s / (lambda_3 + s)``,
    where ``s = theta / 2`` and ``lambda_2 = Lambda([0, 1])``.

    Parameters
    ----------
    k : int

    theta : float

    rates : `~obsclade.ratetable.RateTable`
        Covers at least ``k + 1`` blocks.

    Returns
    -------
    result : `LimitMomentResult`
        ``extra['laplace']`` holds the value computed by
        :func:`laplace_absorption`.

    Raises
    ------
    obsclade.exceptions.WrongRegime
        The measure has dust.

    obsclade.exceptions.ExplicitFormulaMismatch
        General and explicit values disagree.

    """
    if not theta > 0:
        raise exceptions.PreconditionError(
            f'theta must be positive, got {theta}.')
    if rates.spec.classify()['has_dust']:
        raise exceptions.WrongRegime(
            f'{rates.spec!r} has dust; use limit_mean_dust.')

    s = 0.5 * theta
    lams, coeffs = absorption_mixture(k, rates)
    value = 1.0 - math.fsum(coeffs * s / (lams + s))
    extra = {'laplace': laplace_absorption(k, theta, rates)}

    if k <= 2:
        lam2 = rates.totals[2]
        if k == 1:
            explicit = lam2 / (lam2 + s)
        else:
            lam3 = rates.totals[3]
            explicit = 1.0 - 1.5 * s / (lam2 + s) + 0.5 * s / (lam3 + s)
        if abs(explicit - value) > conf.explicit_check_tol * max(
                1.0, abs(explicit)):
            raise exceptions.ExplicitFormulaMismatch(
                f'E(S^{k}) = {value} from the absorption mixture, '
                f'{explicit} from the explicit form.')
        return LimitMomentResult(k, explicit, 'explicit',
                                 a_coefficients=coeffs, rates=lams,
                                 extra=extra)

    return LimitMomentResult(k, value, 'phase_type', a_coefficients=coeffs,
                             rates=lams, extra=extra)


def bsc_limit_beta(theta):
    """Beta law proposed for the limit frequency under the
    Bolthausen-Sznitman coalescent.

    This is a comparison target only: its second moment differs from the
    absorption-mixture value, see :func:`~obsclade.report.errata_notes`.

    Parameters
    ----------
    theta : float

    Returns
    -------
    alpha, beta : float
        ``1 / (1 + s)`` and ``s / (1 + s)`` with ``s = theta / 2``.

    moments : callable
        ``k -> prod_{m<k} (alpha + m) / (alpha + beta + m)``.

    """
    if not theta > 0:
        raise exceptions.PreconditionError(
            f'theta must be positive, got {theta}.')
    s = 0.5 * theta
    alpha = 1.0 / (1.0 + s)
    beta = s / (1.0 + s)

    def moments(k):
        return float(poch(alpha, k) / poch(alpha + beta, k))

    return alpha, beta, moments


def _dust_parameters(theta, spec):
    info = spec.classify()
    if not info['has_dust']:
        raise exceptions.WrongRegime(
            f'{spec!r} has no dust; use limit_moment_nodust.')
    if info['mass_at_one'] > 0:
        raise exceptions.WrongRegime(
            f'{spec!r} has an atom at 1 and does not stay infinite.')
    if not theta > 0:
        raise exceptions.PreconditionError(
            f'theta must be positive, got {theta}.')
    return info['mu_minus1'], spec.total_mass, 0.5 * theta


def printed_dust_mean(theta, spec):
    """Closed form of the dust limit mean with the commonly printed
    constant ``a = (1 - Lambda/mu) s / (s + mu)``; for errata reports."""
    mu, mass, s = _dust_parameters(theta, spec)
    a = (1.0 - mass / mu) * s / (s + mu)
    return 1.0 - s / mu * a / (1.0 - a)


def limit_mean_dust(theta, spec):
    """``E(S)`` for a measure with dust that stays infinite.

    The frequency of the block of leaf 1 jumps at rate ``mu_{-1}``; after
    its ``k``-th jump it has mean ``1 - c^k`` with
    ``c = 1 - Lambda([0, 1]) / mu_{-1}``. The number of jumps before the
    first non-private mutation is geometric with success probability
    ``s / (mu_{-1} + s)``. The series over ``k`` is summed directly and
    checked against its closed form
    ``1 - s / mu_{-1} a / (1 - a)`` with ``a = c mu_{-1} / (s + mu_{-1})``.

    Parameters
    ----------
    theta : float

    spec : `~obsclade.measure.LambdaMeasure`

    Returns
    -------
    result : `LimitMomentResult`
        ``extra`` holds ``closed_form``, ``printed_value`` and
        ``n_terms``.

    Raises
    ------
    obsclade.exceptions.WrongRegime
        No dust, or an atom at 1.

    """
    mu, mass, s = _dust_parameters(theta, spec)
    c = 1.0 - mass / mu
    q = mu / (mu + s)

    # Terms below double resolution relative to the first are dropped
    n_terms = conf.dust_series_max_terms
    if 0 < q < 1:
        n_terms = min(n_terms,
                      int(math.ceil(math.log(1e-18) / math.log(q))) + 1)
    ks = np.arange(1, n_terms + 1)
    with np.errstate(under='ignore'):
        terms = (1.0 - c ** ks) * q ** (ks - 1) * (1.0 - q)
    value = math.fsum(terms)

    tail = q ** n_terms
    if tail > 1e-16:
        tail -= c ** (n_terms + 1) * q ** n_terms * (1.0 - q) / (1.0 - c * q)
        warnings.warn(f'Dust series truncated after {n_terms} terms; '
                      f'adding the remaining tail {tail:.3g} in closed form.',
                      AstropyUserWarning)
        value += tail

    a = c * q
    closed = 1.0 - s / mu * a / (1.0 - a)
    if abs(closed - value) > conf.explicit_check_tol:
        raise exceptions.ExplicitFormulaMismatch(
            f'Dust series gives {value}, closed form {closed}.')

    log.debug(f'Dust mean for {spec!r}, theta={theta}: {value} from '
              f'{n_terms} terms')
    return LimitMomentResult(1, value, 'dust_series',
                             extra={'closed_form': closed,
                                    'printed_value': printed_dust_mean(
                                        theta, spec),
                                    'n_terms': n_terms})


def limit_moments_growth(k, theta, rho, rates):
    """``E(S^k)`` for Kingman's coalescent under exponential growth.

    .. math::

        E(S^k) = 1 - s \\sum_r a_{k+1,r} \\int_0^\\infty (1 + \\rho
        t)^{-s/\\rho - 1} e^{-C(r, 2) t} dt

    Parameters
    ----------
    k : int

    theta : float

    rho : float
        Positive growth rate.

    rates : `~obsclade.ratetable.RateTable`
        Kingman rates covering ``k + 1`` blocks.

    Returns
    -------
    result : `LimitMomentResult`

    Raises
    ------
    obsclade.exceptions.UnsupportedMeasure
        The measure is not Kingman.

    obsclade.exceptions.IntegrationError
        Quadrature did not converge.

    """
    if not isinstance(rates.spec, Kingman):
        raise exceptions.UnsupportedMeasure(
            f'Growth moments are only available for Kingman, got '
            f'{rates.spec!r}.')
    if not (rho > 0 and theta > 0):
        raise exceptions.PreconditionError(
            f'Need rho > 0 and theta > 0, got rho={rho}, theta={theta}.')

    s = 0.5 * theta
    lams, coeffs = absorption_mixture(k, rates)
    power = -s / rho - 1.0
    integrals = []
    for lam in lams:
        res = integrate.quad(
            lambda t: math.exp(power * math.log1p(rho * t) - lam * t),
            0, np.inf, epsabs=conf.growth_quad_atol, epsrel=1e-12,
            full_output=1)
        if len(res) > 3:
            raise exceptions.IntegrationError(
                f'Growth quadrature failed for lambda={lam}, rho={rho}: '
                f'{res[3].splitlines()[0]}')
        integrals.append(res[0])

    value = 1.0 - s * math.fsum(coeffs * np.array(integrals))
    return LimitMomentResult(k, value, 'growth_quadrature',
                             a_coefficients=coeffs, rates=lams,
                             extra={'rho': rho})


def limit_moments(k_max, theta, rates, rho=0.0):
    """Limit moments ``E(S^k)``, ``k = 1, ..., k_max``, by regime.

    Growth (``rho > 0``) uses :func:`limit_moments_growth`; measures
    without dust use :func:`limit_moment_nodust`; measures with dust
    give the mean only, from :func:`limit_mean_dust`.

    Returns
    -------
    results : list of `LimitMomentResult`

    """
    if rho < 0:
        raise exceptions.PreconditionError(
            f'Growth rate must be non-negative, got {rho}.')

    if rho > 0:
        results = [limit_moments_growth(k, theta, rho, rates)
                   for k in range(1, k_max + 1)]
    elif rates.spec.classify()['has_dust']:
        if k_max > 1:
            log.info(f'{rates.spec!r} has dust: only the limit mean is '
                     f'available')
        results = [limit_mean_dust(theta, rates.spec)]
    else:
        results = [limit_moment_nodust(k, theta, rates)
                   for k in range(1, k_max + 1)]

    for prev, cur in zip(results[:-1], results[1:]):
        if cur.value > prev.value + 1e-12:
            raise exceptions.StructuralError(
                f'Limit moments increase from k={prev.k} to k={cur.k}: '
                f'{prev.value} < {cur.value}.')
    return results
