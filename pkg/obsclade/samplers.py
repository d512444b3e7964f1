# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles fast single-leaf samplers, parallel replicate
runs, and Monte Carlo summaries of their output.

The fast samplers follow only block sizes, keeping the block of leaf 1
at index 0. They never place mutations: the first non-private mutation
above leaf 1 arrives an independent exponential ``theta / 2`` time
after its first merger.

"""
# STDLIB
import math
import multiprocessing
import numbers
import pickle
import warnings
from concurrent.futures import ProcessPoolExecutor

# THIRD-PARTY
import numpy as np

# ASTROPY
from astropy import log
from astropy.table import Table
from astropy.utils.exceptions import AstropyUserWarning

# LOCAL
from obsclade import exceptions
from obsclade.config import conf
from obsclade.genealogy import (child_seed, growth_time, make_generator,
                                replicate_seed, simulate_replicate)
from obsclade.ratetable import get_rate_table

__all__ = ['sample_O1', 'sample_X', 'sample_fast', 'leaf_powers',
           'run_replicates', 'MonteCarloSummary']

_KINDS = ('full', 'fast', 'leaf_powers')


def _coalescent_time(t, growth_rate):
    """Inverse of `~obsclade.genealogy.growth_time`."""
    if growth_rate == 0:
        return t
    return math.expm1(growth_rate * t) / growth_rate


def _check(n, rates, theta, growth_rate):
    if n < 1 or (n > 1 and n > rates.n_max):
        raise exceptions.PreconditionError(
            f'Sample size {n} outside rate table range [2, {rates.n_max}].')
    if not theta > 0:
        raise exceptions.PreconditionError(
            f'theta must be positive, got {theta}.')
    if growth_rate < 0:
        raise exceptions.PreconditionError(
            f'Growth rate must be non-negative, got {growth_rate}.')


def _merge(rates, rng, sizes):
    """Apply one merger to ``sizes`` in place; return whether the marked
    block at index 0 took part."""
    b = len(sizes)
    k = rates.sample_merger_size(b, rng.random())
    idx = rng.choice(b, size=k, replace=False)
    involved = bool(np.any(idx == 0))
    merged = 0
    for i in sorted(idx, reverse=True):
        merged += sizes[i]
        sizes[i] = sizes[-1]
        sizes.pop()
    if involved and sizes:
        sizes.append(sizes[0])
        sizes[0] = merged
    else:
        sizes.append(merged)
    return involved


def _mark_walk(rates, rng, sizes, t, deadline):
    """Run mergers from time ``t`` until ``deadline`` (coalescent time)
    and return the size of the marked block."""
    while len(sizes) > 1:
        t += rng.exponential(1.0 / rates.totals[len(sizes)])
        if t > deadline:
            break
        _merge(rates, rng, sizes)
    return sizes[0]


def sample_O1(n, rates, theta, seed, growth_rate=0.0):
    """Minimal observable clade size of leaf 1, without mutations.

    The block-size chain runs until leaf 1 first merges at time ``E``.
    A clock ``M ~ Exp(theta / 2)`` then starts, and the result is the
    size of the block of leaf 1 at its last jump at or before ``E + M``
    (real time), or ``n`` if the MRCA comes first.

    Parameters
    ----------
    n : int

    rates : `~obsclade.ratetable.RateTable`

    theta : float

    seed : int, `numpy.random.SeedSequence`, or `numpy.random.Generator`

    growth_rate : float

    Returns
    -------
    size : int
        In ``[2, n]``.

    """
    _check(n, rates, theta, growth_rate)
    if n < 2:
        raise exceptions.PreconditionError(
            f'O needs at least 2 leaves, got {n}.')
    rng = make_generator(seed)
    clock = rng.exponential(2.0 / theta)
    sizes = [1] * n
    t = 0.0
    while True:
        t += rng.exponential(1.0 / rates.totals[len(sizes)])
        if _merge(rates, rng, sizes):
            break
    if len(sizes) == 1:
        return n
    deadline = _coalescent_time(growth_time(t, growth_rate) + clock,
                                growth_rate)
    return _mark_walk(rates, rng, sizes, t, deadline)


def sample_X(n, rates, theta, seed, growth_rate=0.0):
    """Size of the block of leaf 1 when an exponential ``theta / 2``
    clock started at time 0 rings.

    ``n = 1`` always gives 1.

    """
    if n == 1:
        return 1
    _check(n, rates, theta, growth_rate)
    rng = make_generator(seed)
    deadline = _coalescent_time(rng.exponential(2.0 / theta), growth_rate)
    return _mark_walk(rates, rng, [1] * n, 0.0, deadline)


def sample_fast(n, rates, theta, seed, r, growth_rate=0.0):
    """``(O1, X)`` of replicate ``r``, from child streams 0 and 2."""
    ss = replicate_seed(seed, r)
    return (sample_O1(n, rates, theta, child_seed(ss, 0),
                      growth_rate=growth_rate),
            sample_X(n, rates, theta, child_seed(ss, 2),
                     growth_rate=growth_rate))


def leaf_powers(stats, powers):
    """Leaf averages of ``O ** p`` for ``p = 1, ..., powers``."""
    O = stats.O.astype(np.float64)  # noqa: E741
    return tuple(float(np.mean(O ** p)) for p in range(1, powers + 1))


def _run_chunk(kind, n, spec, theta, seed, start, stop, growth_rate,
               powers):
    """Replicates ``start <= r < stop``; runs inside worker processes."""
    rates = get_rate_table(spec, n)
    if kind == 'full':
        return [simulate_replicate(n, rates, theta, seed, r,
                                   growth_rate=growth_rate)
                for r in range(start, stop)]
    if kind == 'leaf_powers':
        return [leaf_powers(simulate_replicate(n, rates, theta, seed, r,
                                               growth_rate=growth_rate),
                            powers)
                for r in range(start, stop)]
    return [sample_fast(n, rates, theta, seed, r, growth_rate=growth_rate)
            for r in range(start, stop)]


def _picklable(obj):
    try:
        pickle.dumps(obj)
    except (pickle.PicklingError, AttributeError, TypeError):
        return False
    return True


def run_replicates(kind, n, spec, theta, replicates, seed=0, growth_rate=0.0,
                   threads=None, powers=2):
    """Run independent replicates, possibly in several processes.

    Replicate ``r`` draws only from the stream of ``(seed, r)``, so the
    output does not depend on ``threads``.

    Parameters
    ----------
    kind : {'full', 'fast', 'leaf_powers'}
        Full pipeline (per-leaf statistics), fast ``(O1, X)`` samplers, or
        the full pipeline reduced to leaf averages of powers of ``O``
        inside the workers.

    n : int

    spec : `~obsclade.measure.LambdaMeasure`

    theta : float

    replicates : int

    seed : int
        Master seed.

    growth_rate : float

    threads : int or `None`
        Worker processes. Default is ``conf.threads``.

    powers : int
        Largest power of ``O`` for ``'leaf_powers'``.

    Returns
    -------
    results : list
        `~obsclade.genealogy.CladeStatsVector` per replicate for
        ``'full'``; ``(O1, X)`` tuples for ``'fast'``; tuples of
        :func:`leaf_powers` for ``'leaf_powers'``. Replicate order.

    """
    if kind not in _KINDS:
        raise exceptions.PreconditionError(
            f'Unknown replicate kind {kind!r}, expected one of {_KINDS}.')
    if not replicates >= 1:
        raise exceptions.PreconditionError(
            f'Need at least one replicate, got {replicates}.')
    if not (isinstance(powers, numbers.Integral) and powers >= 1):
        raise exceptions.PreconditionError(
            f'powers must be a positive integer, got {powers!r}.')
    if threads is None:
        threads = conf.threads
    threads = max(1, min(int(threads), replicates))

    if threads > 1 and not _picklable(spec):
        warnings.warn(f'{spec!r} cannot be sent to worker processes; '
                      'running replicates serially.', AstropyUserWarning)
        threads = 1

    if threads == 1:
        return _run_chunk(kind, n, spec, theta, seed, 0, replicates,
                          growth_rate, powers)

    bounds = np.linspace(0, replicates, 4 * threads + 1).astype(int)
    chunks = [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    log.info(f'Running {replicates} {kind} replicates of n={n} on '
             f'{threads} processes')
    ctx = multiprocessing.get_context('spawn')
    with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as ex:
        futures = [ex.submit(_run_chunk, kind, n, spec, theta, seed,
                             int(a), int(b), growth_rate, powers)
                   for a, b in chunks]
        results = []
        for future in futures:
            results.extend(future.result())
    return results


class MonteCarloSummary:
    """Per-replicate values of several statistics, with their means and
    standard errors.

    Statistic ids are ``E[O^j]``, ``E[X^j]`` and ``E[(O/n)^k]``.

    """
    def __init__(self):
        self._values = {}

    def __repr__(self):
        return f'MonteCarloSummary({sorted(self._values)})'

    def __contains__(self, stat_id):
        return stat_id in self._values

    def add(self, stat_id, values):
        """Append per-replicate values of one statistic."""
        values = np.asarray(values, dtype=np.float64).ravel()
        old = self._values.get(stat_id)
        self._values[stat_id] = (values if old is None
                                 else np.concatenate([old, values]))

    @property
    def ids(self):
        return sorted(self._values)

    def count(self, stat_id):
        return self._get(stat_id).size

    def mean(self, stat_id):
        return float(np.mean(self._get(stat_id)))

    def stderr(self, stat_id):
        """Standard error of the mean; 0 for a single replicate."""
        values = self._get(stat_id)
        if values.size < 2:
            return 0.0
        return float(np.std(values, ddof=1) / math.sqrt(values.size))

    def _get(self, stat_id):
        try:
            return self._values[stat_id]
        except KeyError:
            raise exceptions.StructuralError(
                f'No Monte Carlo values for {stat_id!r}.') from None

    @classmethod
    def from_full(cls, stats, j_max=2, k_max=2):
        """Summary of full-pipeline replicates.

        Each replicate contributes the average over its leaves, which has
        the mean of any single leaf by exchangeability.

        Parameters
        ----------
        stats : list of `~obsclade.genealogy.CladeStatsVector`

        j_max, k_max : int
            Largest exponents of ``O`` and ``O / n``.

        """
        powers = max(j_max, k_max)
        return cls.from_leaf_powers([leaf_powers(s, powers) for s in stats],
                                    stats[0].n, j_max=j_max, k_max=k_max)

    @classmethod
    def from_leaf_powers(cls, rows, n, j_max=2, k_max=2):
        """Summary of per-replicate leaf averages of ``O ** p``.

        Parameters
        ----------
        rows : list of tuple
            Output of :func:`leaf_powers` per replicate, with at least
            ``max(j_max, k_max)`` powers.

        n : int
            Sample size.

        j_max, k_max : int
            Largest exponents of ``O`` and ``O / n``.

        """
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] < max(j_max, k_max):
            raise exceptions.StructuralError(
                f'Need {max(j_max, k_max)} powers per replicate, got '
                f'shape {rows.shape}.')
        summary = cls()
        for j in range(1, j_max + 1):
            summary.add(f'E[O^{j}]', rows[:, j - 1])
        for k in range(1, k_max + 1):
            summary.add(f'E[(O/n)^{k}]', rows[:, k - 1] / n ** k)
        return summary

    @classmethod
    def from_fast(cls, draws, n, j_max=2, k_max=2):
        """Summary of fast ``(O1, X)`` draws."""
        draws = np.asarray(draws, dtype=np.float64).reshape(-1, 2)
        summary = cls()
        for j in range(1, j_max + 1):
            summary.add(f'E[O^{j}]', draws[:, 0] ** j)
            summary.add(f'E[X^{j}]', draws[:, 1] ** j)
        for k in range(1, k_max + 1):
            summary.add(f'E[(O/n)^{k}]', (draws[:, 0] / n) ** k)
        return summary

    def to_table(self):
        """Table of ``statistic, estimate, stderr, count``."""
        ids = self.ids
        return Table([ids, [self.mean(i) for i in ids],
                      [self.stderr(i) for i in ids],
                      [self.count(i) for i in ids]],
                     names=('statistic', 'estimate', 'stderr', 'count'))
