# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles exact small-sample moments of ``X_n`` and ``O_n``
by first-step analysis over marked block configurations.

A configuration is the multiset of block sizes, the size of the block
holding leaf 1, and a phase. In the ``clock_running`` phase an
exponential ``theta / 2`` clock competes with all mergers; when it rings
the statistic is the current size of the marked block. For ``O_n`` the
chain starts in ``pre_merge``, where the clock is inert until leaf 1
first merges.

This is independent of the recursions in `obsclade.moments` and is
meant to check them.

"""
# STDLIB
import itertools
import math
import warnings
from collections import Counter, deque

# THIRD-PARTY
import numpy as np
from scipy import linalg

# ASTROPY
from astropy import log

# LOCAL
from obsclade import exceptions
from obsclade.config import conf

__all__ = ['PRE_MERGE', 'CLOCK_RUNNING', 'MarkedConfiguration',
           'enumerate_states', 'exact_moments_dp', 'exact_moments_labeled']

PRE_MERGE = 'pre_merge'
CLOCK_RUNNING = 'clock_running'


class MarkedConfiguration:
    """Lumped state of the coalescent seen from leaf 1.

    Parameters
    ----------
    sizes : iterable of int
        Block sizes; stored sorted in decreasing order.

    one_block_size : int
        Size of the block of leaf 1; must be one of ``sizes``.

    phase : {'pre_merge', 'clock_running'}

    """
    __slots__ = ('sizes', 'one_block_size', 'phase')

    def __init__(self, sizes, one_block_size, phase):
        sizes = tuple(sorted(sizes, reverse=True))
        if one_block_size not in sizes:
            raise exceptions.StructuralError(
                f'Marked size {one_block_size} not among sizes {sizes}.')
        if phase not in (PRE_MERGE, CLOCK_RUNNING):
            raise exceptions.StructuralError(f'Unknown phase {phase!r}.')
        if phase == PRE_MERGE and one_block_size != 1:
            raise exceptions.StructuralError(
                'Leaf 1 is a singleton until its first merger.')
        self.sizes = sizes
        self.one_block_size = one_block_size
        self.phase = phase

    def _key(self):
        return (self.sizes, self.one_block_size, self.phase)

    def __eq__(self, other):
        if not isinstance(other, MarkedConfiguration):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return (f'MarkedConfiguration({list(self.sizes)}, '
                f'{self.one_block_size}, {self.phase})')

    @property
    def n(self):
        return sum(self.sizes)

    @property
    def n_blocks(self):
        return len(self.sizes)

    def transitions(self):
        """All possible next configurations.

        Yields
        ------
        state : `MarkedConfiguration`

        count : int
            Number of block subsets leading to ``state``.

        k : int
            Merger size.

        """
        mark = self.one_block_size
        others = Counter(self.sizes)
        others[mark] -= 1
        kinds = sorted(s for s in others if others[s] > 0)

        for with_mark in (False, True):
            for picks in itertools.product(
                    *(range(others[s] + 1) for s in kinds)):
                k = sum(picks) + with_mark
                if k < 2:
                    continue
                count = math.prod(math.comb(others[s], d)
                                  for s, d in zip(kinds, picks))
                merged = sum(s * d for s, d in zip(kinds, picks))
                rest = []
                for s, d in zip(kinds, picks):
                    rest.extend([s] * (others[s] - d))
                if with_mark:
                    merged += mark
                    new_mark = merged
                    phase = CLOCK_RUNNING
                else:
                    rest.append(mark)
                    new_mark = mark
                    phase = self.phase
                yield (MarkedConfiguration(rest + [merged], new_mark, phase),
                       count, k)


def _start_states(n):
    return (MarkedConfiguration([1] * n, 1, CLOCK_RUNNING),
            MarkedConfiguration([1] * n, 1, PRE_MERGE))


def enumerate_states(n):
    """All configurations reachable from ``n`` singletons, in either
    phase.

    Parameters
    ----------
    n : int
        ``2 <= n <= conf.oracle_max_n``.

    Returns
    -------
    states : list of `MarkedConfiguration`
        In breadth-first order, starting with the ``clock_running`` and
        ``pre_merge`` singleton configurations.

    Raises
    ------
    obsclade.exceptions.StateSpaceTooLarge
        ``n`` exceeds ``conf.oracle_max_n``.

    """
    if n > conf.oracle_max_n:
        raise exceptions.StateSpaceTooLarge(
            f'Oracle is limited to n <= {conf.oracle_max_n}, got {n}.')
    if n < 2:
        raise exceptions.PreconditionError(
            f'Oracle needs n >= 2, got {n}.')

    starts = _start_states(n)
    seen = set(starts)
    states = list(starts)
    queue = deque(starts)
    while queue:
        state = queue.popleft()
        for nxt, _, _ in state.transitions():
            if nxt not in seen:
                seen.add(nxt)
                states.append(nxt)
                queue.append(nxt)
    return states


def _solve(A, B, what):
    """Dense solve; ill-conditioning counts as failure."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('error', linalg.LinAlgWarning)
            return linalg.solve(A, B)
    except (linalg.LinAlgError, linalg.LinAlgWarning) as e:
        raise exceptions.OracleError(
            f'First-step system for {what} is singular: {e}') from e


def exact_moments_dp(n, j_max, theta, rates):
    """``E(X_n^j)`` and ``E(O_n^j)`` for ``j <= j_max`` by first-step
    equations on marked configurations.

    For a ``clock_running`` state ``sigma`` with marked size ``m`` and
    ``b >= 2`` blocks,
    ``(s + R) V(sigma) - sum_tau r_tau V(tau) = s m^j``; a single block
    has ``V = n^j``; a ``pre_merge`` state has
    ``R V(sigma) - sum_tau r_tau V(tau) = 0``. Here ``s = theta / 2``,
    ``r_tau`` is the number of block subsets leading to ``tau`` times
    ``lambda_{b,k}``, and ``R`` is the sum of all ``r_tau``.

    Parameters
    ----------
    n, j_max : int

    theta : float

    rates : `~obsclade.ratetable.RateTable`

    Returns
    -------
    EX, EO : ndarray
        Indexed by exponent ``0, ..., j_max``.

    Raises
    ------
    obsclade.exceptions.OracleError
        The linear system could not be solved.

    """
    if not theta > 0:
        raise exceptions.PreconditionError(
            f'theta must be positive, got {theta}.')
    if rates.n_max < n:
        raise exceptions.PreconditionError(
            f'{rates!r} does not cover n={n}.')

    states = enumerate_states(n)
    index = {state: i for i, state in enumerate(states)}
    size = len(states)
    s = 0.5 * theta
    js = np.arange(j_max + 1)
    A = np.zeros((size, size))
    B = np.zeros((size, j_max + 1))

    for i, state in enumerate(states):
        b = state.n_blocks
        if b == 1:
            A[i, i] = 1.0
            B[i] = float(n) ** js
            continue
        total = 0.0
        for nxt, count, k in state.transitions():
            r = count * rates.rates[b][k - 2]
            A[i, index[nxt]] -= r
            total += r
        A[i, i] += total
        if state.phase == CLOCK_RUNNING:
            A[i, i] += s
            B[i] = s * float(state.one_block_size) ** js

    V = _solve(A, B, f'n={n}, theta={theta}, {rates.spec!r}')
    log.debug(f'Oracle solved {size} states for n={n}')
    return V[0], V[1]


def _set_partition_transitions(blocks):
    """Next labeled partitions: ``(new_blocks, k)`` per merged subset."""
    b = len(blocks)
    for k in range(2, b + 1):
        for chosen in itertools.combinations(range(b), k):
            merged = frozenset().union(*(blocks[i] for i in chosen))
            rest = [blocks[i] for i in range(b) if i not in chosen]
            yield tuple(sorted(rest + [merged], key=min)), k


def exact_moments_labeled(n, j_max, theta, rates):
    """Same as :func:`exact_moments_dp` on labeled set partitions.

    Only for ``n <= 4``; used to check that lumping by block sizes loses
    nothing.

    """
    if not 2 <= n <= 4:
        raise exceptions.StateSpaceTooLarge(
            f'Labeled oracle is limited to 2 <= n <= 4, got {n}.')
    if not theta > 0:
        raise exceptions.PreconditionError(
            f'theta must be positive, got {theta}.')

    start = tuple(frozenset([i]) for i in range(n))
    starts = [(start, CLOCK_RUNNING), (start, PRE_MERGE)]
    index = {st: i for i, st in enumerate(starts)}
    states = list(starts)
    edges = []
    pos = 0
    while pos < len(states):
        blocks, phase = states[pos]
        out = []
        for new_blocks, k in _set_partition_transitions(blocks):
            involved = any(0 in blk and len(blk) > 1 for blk in new_blocks
                           if blk not in blocks)
            new_phase = CLOCK_RUNNING if involved else phase
            nxt = (new_blocks, new_phase)
            if nxt not in index:
                index[nxt] = len(states)
                states.append(nxt)
            out.append((index[nxt], k))
        edges.append(out)
        pos += 1

    s = 0.5 * theta
    js = np.arange(j_max + 1)
    size = len(states)
    A = np.zeros((size, size))
    B = np.zeros((size, j_max + 1))
    for i, (blocks, phase) in enumerate(states):
        b = len(blocks)
        if b == 1:
            A[i, i] = 1.0
            B[i] = float(n) ** js
            continue
        for t, k in edges[i]:
            r = rates.rates[b][k - 2]
            A[i, t] -= r
            A[i, i] += r
        if phase == CLOCK_RUNNING:
            mark = next(len(blk) for blk in blocks if 0 in blk)
            A[i, i] += s
            B[i] = s * float(mark) ** js

    V = _solve(A, B, f'labeled n={n}')
    return V[0], V[1]
