# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles the finite measures that define Lambda-coalescents.

A Lambda-coalescent with ``b`` blocks merges any given ``k`` of them at
rate

.. math::

    \\lambda_{b,k} = \\int_0^1 x^{k-2} (1-x)^{b-k} \\Lambda(dx)

Built-in measures (Kingman, Dirac, Beta, Uniform) use closed forms;
arbitrary densities are integrated numerically.

"""
# STDLIB
import math
import numbers
from fractions import Fraction

# THIRD-PARTY
import numpy as np
from scipy import integrate
from scipy.special import betaln, gammaln, logsumexp, xlogy

# ASTROPY
from astropy import log

# LOCAL
from obsclade import exceptions
from obsclade.config import conf

__all__ = ['LambdaMeasure', 'Kingman', 'Dirac', 'BetaMeasure', 'Uniform',
           'CustomDensity', 'lambda_bk', 'total_rate', 'classify',
           'measure_from_dict', 'log_binom']

# Truncation points for the divergence test of the first inverse moment
_DUST_EPSILONS = 10.0 ** -np.arange(2, 14, 2)


def log_binom(b, k):
    """Natural log of the binomial coefficient, vectorized over ``k``."""
    k = np.asarray(k, dtype=np.float64)
    return gammaln(b + 1) - gammaln(k + 1) - gammaln(b - k + 1)


def _validate_bk(b, k):
    """Check ``2 <= k <= b`` for merger rate arguments."""
    if not (isinstance(b, numbers.Integral) and
            isinstance(k, numbers.Integral)):
        raise exceptions.PreconditionError(
            f'b and k must be integers, got b={b!r}, k={k!r}.')
    if not 2 <= k <= b:
        raise exceptions.PreconditionError(
            f'Merger rate needs 2 <= k <= b, got b={b}, k={k}.')


class LambdaMeasure:
    """Base class for a finite measure on ``[0, 1]``.

    Subclasses provide log merger rates for a fixed block count, the
    total mass, the atom at one, and the first inverse moment.

    """
    name = None

    def __repr__(self):
        pars = ', '.join(f'{key}={val}' for key, val in self._key()[1:])
        return f'{self.__class__.__name__}({pars})'

    def __eq__(self, other):
        if not isinstance(other, LambdaMeasure):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        return (self.name, )

    @property
    def total_mass(self):
        """Total mass of the measure."""
        raise NotImplementedError('To be implemented by subclasses.')

    @property
    def mass_at_one(self):
        """Mass of the atom at 1."""
        return 0.0

    @property
    def mu_minus1(self):
        """First inverse moment, infinite if the integral diverges."""
        raise NotImplementedError('To be implemented by subclasses.')

    def log_rates(self, b):
        """Log merger rates ``log(lambda_{b,k})`` for ``k = 2, ..., b``.

        Parameters
        ----------
        b : int
            Number of blocks.

        Returns
        -------
        log_lam : ndarray
            Array of length ``b - 1``; zero rates are ``-inf``.

        """
        raise NotImplementedError('To be implemented by subclasses.')

    def rates(self, b):
        """Merger rates ``lambda_{b,k}`` for ``k = 2, ..., b``."""
        return np.exp(self.log_rates(b))

    def lambda_bk(self, b, k):
        """Rate at which a given ``k`` out of ``b`` blocks merge."""
        _validate_bk(b, k)
        return float(self.rates(b)[k - 2])

    def lambda_bk_exact(self, b, k):
        """Exact rational merger rate, for measures that admit one."""
        raise exceptions.UnsupportedMeasure(
            f'{self!r} has no exact rational merger rates.')

    def log_total_rate(self, b):
        """Log of the total merger rate with ``b`` blocks."""
        ks = np.arange(2, b + 1)
        return float(logsumexp(log_binom(b, ks) + self.log_rates(b)))

    def total_rate(self, b):
        """Total merger rate ``lambda_b`` with ``b`` blocks."""
        if not (isinstance(b, numbers.Integral) and b >= 2):
            raise exceptions.PreconditionError(
                f'Total rate needs an integer b >= 2, got {b!r}.')
        return math.exp(self.log_total_rate(b))

    def classify(self):
        """Dust and staying-infinite classification.

        Returns
        -------
        result : dict
            Keys ``mu_minus1``, ``has_dust``, ``stays_infinite`` and
            ``mass_at_one``.

        """
        mu = self.mu_minus1
        atom = self.mass_at_one
        return {'mu_minus1': mu,
                'has_dust': bool(np.isfinite(mu)),
                'stays_infinite': atom == 0,
                'mass_at_one': atom}

    def to_dict(self):
        """JSON-compatible representation, see :func:`measure_from_dict`."""
        return {'measure': self.name}


class Kingman(LambdaMeasure):
    """Point mass at 0: only binary mergers, each at rate 1."""
    name = 'kingman'

    @property
    def total_mass(self):
        return 1.0

    @property
    def mu_minus1(self):
        return np.inf

    def log_rates(self, b):
        log_lam = np.full(b - 1, -np.inf)
        log_lam[0] = 0.0
        return log_lam

    def lambda_bk_exact(self, b, k):
        _validate_bk(b, k)
        return Fraction(int(k == 2))

    def total_rate(self, b):
        if not (isinstance(b, numbers.Integral) and b >= 2):
            raise exceptions.PreconditionError(
                f'Total rate needs an integer b >= 2, got {b!r}.')
        return float(b * (b - 1) // 2)


class Dirac(LambdaMeasure):
    """Point mass at ``p``; each block joins a merger with probability
    ``p``.

    Parameters
    ----------
    p : float
        Location of the atom, in ``(0, 1]``.

    """
    name = 'dirac'

    def __init__(self, p):
        p = float(p)
        if not 0 < p <= 1:
            raise exceptions.PreconditionError(
                f'Dirac location must be in (0, 1], got {p}.')
        self.p = p

    def _key(self):
        return (self.name, ('p', self.p))

    @property
    def total_mass(self):
        return 1.0

    @property
    def mass_at_one(self):
        return 1.0 if self.p == 1 else 0.0

    @property
    def mu_minus1(self):
        return 1.0 / self.p

    def log_rates(self, b):
        ks = np.arange(2, b + 1)
        # xlogy keeps 0**0 == 1 for p == 1
        with np.errstate(divide='ignore'):
            return xlogy(ks - 2, self.p) + xlogy(b - ks, 1 - self.p)

    def lambda_bk_exact(self, b, k):
        _validate_bk(b, k)
        p = Fraction(self.p)
        return p ** (k - 2) * (1 - p) ** (b - k)

    def to_dict(self):
        return {'measure': self.name, 'p': self.p}


class BetaMeasure(LambdaMeasure):
    """Beta distribution on ``[0, 1]``, optionally rescaled.

    Parameters
    ----------
    shape1, shape2 : float
        Positive shape parameters.

    scale : float
        Total mass; all rates are multiplied by it.

    """
    name = 'beta'

    def __init__(self, shape1, shape2, scale=1.0):
        shape1 = float(shape1)
        shape2 = float(shape2)
        scale = float(scale)
        if shape1 <= 0 or shape2 <= 0:
            raise exceptions.PreconditionError(
                f'Beta shapes must be positive, got {shape1}, {shape2}.')
        if not (0 < scale < np.inf):
            raise exceptions.PreconditionError(
                f'Beta scale must be positive and finite, got {scale}.')
        self.shape1 = shape1
        self.shape2 = shape2
        self.scale = scale

    def _key(self):
        return (self.name, ('shape1', self.shape1), ('shape2', self.shape2),
                ('scale', self.scale))

    @property
    def total_mass(self):
        return self.scale

    @property
    def mu_minus1(self):
        if self.shape1 <= 1:
            return np.inf
        return self.scale * math.exp(
            betaln(self.shape1 - 1, self.shape2) -
            betaln(self.shape1, self.shape2))

    def density(self, x):
        """Density of the measure at ``x`` in ``(0, 1)``."""
        return self.scale * math.exp(
            xlogy(self.shape1 - 1, x) + xlogy(self.shape2 - 1, 1 - x) -
            betaln(self.shape1, self.shape2))

    def log_rates(self, b):
        ks = np.arange(2, b + 1)
        return (betaln(self.shape1 + ks - 2, self.shape2 + b - ks) -
                betaln(self.shape1, self.shape2) + math.log(self.scale))

    def to_dict(self):
        d = {'measure': self.name, 'shape1': self.shape1,
             'shape2': self.shape2}
        if self.scale != 1:
            d['scale'] = self.scale
        return d


class Uniform(BetaMeasure):
    """Uniform measure on ``[0, 1]`` (Bolthausen-Sznitman coalescent)."""
    name = 'uniform'

    def __init__(self):
        super().__init__(1, 1)

    def _key(self):
        return (self.name, )

    def lambda_bk_exact(self, b, k):
        _validate_bk(b, k)
        return Fraction(math.factorial(k - 2) * math.factorial(b - k),
                        math.factorial(b - 1))

    def to_dict(self):
        return {'measure': self.name}


class CustomDensity(LambdaMeasure):
    """Measure with a user-supplied density on ``(0, 1)``.

    Merger rates are obtained by adaptive quadrature. The interval is
    split at 1/2 and substituted ``x = u**2`` on the left and
    ``x = 1 - v**2`` on the right to soften endpoint singularities.

    Parameters
    ----------
    density : callable
        Non-negative function of one float in ``(0, 1)``.

    total_mass : float
        Integral of ``density``.

    mu_minus1 : float or `None`
        First inverse moment, if known. This bypasses the numerical
        divergence test in :meth:`classify`; use ``numpy.inf`` for a
        measure without dust.

    name : str
        Label used in reports.

    """
    name = 'custom'

    def __init__(self, density, total_mass, mu_minus1=None, name='custom'):
        if not callable(density):
            raise exceptions.PreconditionError('Density must be callable.')
        total_mass = float(total_mass)
        if not (0 < total_mass < np.inf):
            raise exceptions.PreconditionError(
                f'Total mass must be positive and finite, got {total_mass}.')
        self.density = density
        self._total_mass = total_mass
        self._mu_minus1 = mu_minus1
        self.label = name

    def __repr__(self):
        return f'CustomDensity({self.label})'

    def _key(self):
        return (self.name, id(self))

    @property
    def total_mass(self):
        return self._total_mass

    def _quad(self, func, epsabs=0.0):
        """Integrate ``func`` on ``[0, sqrt(1/2)]`` within the budget.

        Returns the value and a failure message (`None` on success).

        """
        limit = max(conf.quad_max_evaluations // 42, 50)
        res = integrate.quad(func, 0, math.sqrt(0.5), epsabs=epsabs,
                             epsrel=conf.quad_rtol, limit=limit,
                             full_output=1)
        if len(res) > 3:
            return res[0], res[3]
        return res[0], None

    def _integrate_rate(self, b, k):
        """Quadrature of ``x**(k-2) * (1-x)**(b-k) * density(x)``."""
        f = self.density

        def left(u):
            x = u * u
            return 2 * u * x ** (k - 2) * (1 - x) ** (b - k) * f(x)

        def right(v):
            y = v * v
            return 2 * v * (1 - y) ** (k - 2) * y ** (b - k) * f(1 - y)

        lo, lo_msg = self._quad(left)
        hi, hi_msg = self._quad(right)

        # One half may be negligible next to the other; then judge it
        # against the total instead of its own size.
        if lo_msg is not None or hi_msg is not None:
            epsabs = conf.quad_rtol * abs(lo + hi)
            if lo_msg is not None:
                lo, lo_msg = self._quad(left, epsabs=epsabs)
            if hi_msg is not None:
                hi, hi_msg = self._quad(right, epsabs=epsabs)
            if lo_msg is not None or hi_msg is not None:
                raise exceptions.RateIntegrationError(
                    b, k, (lo_msg or hi_msg).splitlines()[0])

        val = lo + hi
        if not np.isfinite(val) or val < 0:
            raise exceptions.RateIntegrationError(
                b, k, f'Integral evaluated to {val}.')
        return val

    def lambda_bk(self, b, k):
        _validate_bk(b, k)
        return self._integrate_rate(b, k)

    def rates(self, b):
        log.debug(f'{self!r}: integrating {b - 1} merger rates for b={b}')
        return np.array([self._integrate_rate(b, k)
                         for k in range(2, b + 1)])

    def log_rates(self, b):
        with np.errstate(divide='ignore'):
            return np.log(self.rates(b))

    @property
    def mu_minus1(self):
        if self._mu_minus1 is not None:
            return float(self._mu_minus1)
        return self._detect_mu_minus1()

    def _detect_mu_minus1(self):
        """Decide finiteness of the first inverse moment numerically.

        Truncated integrals over ``[eps, 1]`` are computed for a
        decreasing ladder of ``eps`` (in log coordinates). Geometric
        decay of the increments means convergence; non-decaying
        increments mean divergence.

        """
        f = self.density
        limit = max(conf.quad_max_evaluations // 21, 50)

        def integrand(s):
            return f(math.exp(-s))

        upper = -np.log(_DUST_EPSILONS)
        increments = []
        lower = 0.0
        for s in upper:
            res = integrate.quad(integrand, lower, s, epsabs=0.0,
                                 epsrel=1e-8, limit=limit, full_output=1)
            if len(res) > 3:
                raise exceptions.DustClassificationInconclusive(
                    f'{self!r}: truncated integral failed near 0 '
                    f'({res[3].splitlines()[0]}). Supply mu_minus1.')
            increments.append(res[0])
            lower = s

        total = math.fsum(increments)
        d = np.array(increments[1:])
        if total == 0:
            return 0.0
        ratios = d[1:] / d[:-1] if np.all(d[:-1] > 0) else np.zeros(0)
        log.debug(f'{self!r}: inverse moment increments {increments}')

        if d[-1] <= 1e-10 * total:
            return total
        if ratios.size >= 2 and np.all(ratios[-2:] <= 0.5):
            r = ratios[-1]
            return total + d[-1] * r / (1 - r)
        if ratios.size >= 2 and np.all(ratios[-2:] >= 0.999):
            return np.inf
        raise exceptions.DustClassificationInconclusive(
            f'{self!r}: cannot decide whether the first inverse moment is '
            f'finite (last increments {d[-2:]}). Supply mu_minus1.')

    def to_dict(self):
        raise exceptions.UnsupportedMeasure(
            f'{self!r} cannot be serialized to JSON.')


def lambda_bk(spec, b, k):
    """Rate at which any given ``k`` of ``b`` blocks merge.

    Parameters
    ----------
    spec : `LambdaMeasure`
        The measure.

    b, k : int
        Block count and merger size, ``2 <= k <= b``.

    Returns
    -------
    rate : float

    Raises
    ------
    obsclade.exceptions.PreconditionError
        Invalid ``(b, k)``.

    obsclade.exceptions.RateIntegrationError
        Quadrature did not converge for a custom density.

    """
    return spec.lambda_bk(b, k)


def total_rate(spec, b):
    """Total merger rate ``lambda_b = sum_k C(b, k) lambda_{b,k}``."""
    return spec.total_rate(b)


def classify(spec):
    """Classify a measure, see :meth:`LambdaMeasure.classify`."""
    return spec.classify()


_MEASURE_KEYS = {'kingman': set(),
                 'uniform': set(),
                 'dirac': {'p'},
                 'beta': {'alpha', 'shape1', 'shape2', 'scale'}}


def measure_from_dict(d):
    """Construct a measure from its JSON object.

    Accepted forms::

        {"measure": "kingman"}
        {"measure": "uniform"}
        {"measure": "dirac", "p": 0.5}
        {"measure": "beta", "alpha": 1.5}
        {"measure": "beta", "shape1": 0.5, "shape2": 1.5, "scale": 1}

    ``alpha`` denotes the Beta(2 - alpha, alpha) distribution.

    Parameters
    ----------
    d : dict

    Returns
    -------
    spec : `LambdaMeasure`

    Raises
    ------
    obsclade.exceptions.ConfigError
        Unknown measure, unknown keys or missing parameters.

    """
    if isinstance(d, LambdaMeasure):
        return d
    if not isinstance(d, dict) or 'measure' not in d:
        raise exceptions.ConfigError(
            'Expected an object with a "measure" key.', field='measure')

    kind = str(d['measure']).lower()
    if kind not in _MEASURE_KEYS:
        raise exceptions.ConfigError(
            f'Unknown measure {d["measure"]!r}, expected one of '
            f'{sorted(_MEASURE_KEYS)}.', field='measure')

    extra = set(d) - {'measure'} - _MEASURE_KEYS[kind]
    if extra:
        raise exceptions.ConfigError(
            f'Unexpected keys {sorted(extra)} for {kind} measure.',
            field='measure')

    try:
        if kind == 'kingman':
            return Kingman()
        if kind == 'uniform':
            return Uniform()
        if kind == 'dirac':
            if 'p' not in d:
                raise exceptions.ConfigError(
                    'Dirac measure needs "p".', field='measure')
            return Dirac(d['p'])

        scale = d.get('scale', 1.0)
        if 'alpha' in d:
            if 'shape1' in d or 'shape2' in d:
                raise exceptions.ConfigError(
                    'Give either "alpha" or "shape1"/"shape2", not both.',
                    field='measure')
            alpha = float(d['alpha'])
            if not 0 < alpha < 2:
                raise exceptions.ConfigError(
                    f'alpha must be in (0, 2), got {alpha}.',
                    field='measure')
            return BetaMeasure(2 - alpha, alpha, scale=scale)
        if 'shape1' not in d or 'shape2' not in d:
            raise exceptions.ConfigError(
                'Beta measure needs "alpha" or "shape1" and "shape2".',
                field='measure')
        return BetaMeasure(d['shape1'], d['shape2'], scale=scale)
    except exceptions.PreconditionError as e:
        raise exceptions.ConfigError(str(e), field='measure') from e
