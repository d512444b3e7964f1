# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles simulated genealogies, mutations placed on their
branches, and the per-leaf clade statistics extracted from both.

Block identifiers are dense integers: leaf ``i`` has id ``i`` and the
block created by the ``e``-th merger has id ``n + e``.

"""
# THIRD-PARTY
import numpy as np

# ASTROPY
from astropy import log
from astropy.table import Table

# LOCAL
from obsclade import exceptions

__all__ = ['make_generator', 'replicate_seed', 'child_seed', 'EventLog',
           'MutationSet', 'CladeStatsVector', 'simulate_genealogy',
           'place_mutations', 'observable_clades', 'simulate_replicate',
           'growth_time']


def make_generator(seed):
    """Counter-based random generator for a seed.

    Parameters
    ----------
    seed : int, `numpy.random.SeedSequence`, or `numpy.random.Generator`
        A generator is returned unchanged.

    Returns
    -------
    rng : `numpy.random.Generator`
        Backed by `numpy.random.Philox`.

    """
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def replicate_seed(seed, r):
    """Seed sequence of replicate ``r`` under master seed ``seed``."""
    return np.random.SeedSequence(seed, spawn_key=(int(r), ))


def child_seed(ss, i):
    """Child ``i`` of a seed sequence, independent of spawn history."""
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i, ))


def growth_time(t, growth_rate):
    """Map coalescent time to real time under exponential growth."""
    if growth_rate == 0:
        return t
    return np.log1p(growth_rate * t) / growth_rate


class EventLog:
    """Ordered merger events of one genealogy, run to the MRCA.

    Parameters
    ----------
    n : int
        Number of leaves.

    events : list
        Items ``(time, merged_ids)`` or ``(time, merged_ids, new_id)``
        in increasing time order. New ids must be dense.

    Raises
    ------
    obsclade.exceptions.StructuralError
        Non-increasing times, merging a block that is not alive, wrong
        new id, or a log that does not end in a single block.

    """
    def __init__(self, n, events):
        if n < 2:
            raise exceptions.PreconditionError(
                f'A genealogy needs at least 2 leaves, got {n}.')
        self.n = int(n)
        n_blocks = self.n + len(events)
        self.parent = np.full(n_blocks, -1, dtype=np.int64)
        self.birth = np.zeros(n_blocks)
        self.death = np.full(n_blocks, np.inf)
        self.size = np.zeros(n_blocks, dtype=np.int64)
        self.size[:self.n] = 1

        alive = set(range(self.n))
        prev_time = 0.0
        norm_events = []
        for e, ev in enumerate(events):
            time = float(ev[0])
            merged = tuple(sorted(int(x) for x in ev[1]))
            new_id = self.n + e
            if len(ev) > 2 and int(ev[2]) != new_id:
                raise exceptions.StructuralError(
                    f'Event {e} creates block {ev[2]}, expected {new_id}.')
            if not time > prev_time:
                raise exceptions.StructuralError(
                    f'Event times must increase strictly: event {e} at '
                    f'{time} follows {prev_time}.')
            if len(merged) < 2 or len(set(merged)) != len(merged):
                raise exceptions.StructuralError(
                    f'Event {e} must merge at least 2 distinct blocks, '
                    f'got {merged}.')
            dead = [m for m in merged if m not in alive]
            if dead:
                raise exceptions.StructuralError(
                    f'Event {e} merges blocks {dead} that are not alive.')

            alive.difference_update(merged)
            alive.add(new_id)
            idx = list(merged)
            self.parent[idx] = new_id
            self.death[idx] = time
            self.birth[new_id] = time
            self.size[new_id] = self.size[idx].sum()
            norm_events.append((time, merged, new_id))
            prev_time = time

        if len(alive) != 1:
            raise exceptions.StructuralError(
                f'Genealogy ends with {len(alive)} blocks instead of one.')

        self.events = tuple(norm_events)
        self._children = None

    def __repr__(self):
        return (f'EventLog(n={self.n}, n_events={self.n_events}, '
                f'tmrca={self.tmrca:.6g})')

    def __eq__(self, other):
        if not isinstance(other, EventLog):
            return NotImplemented
        return self.n == other.n and self.events == other.events

    @property
    def n_events(self):
        """Number of merger events."""
        return len(self.events)

    @property
    def n_blocks(self):
        """Number of blocks ever alive, leaves included."""
        return self.parent.size

    @property
    def root(self):
        """Id of the block holding all leaves."""
        return self.n_blocks - 1

    @property
    def tmrca(self):
        """Time of the most recent common ancestor."""
        return self.events[-1][0]

    @property
    def times(self):
        """Event times."""
        return np.array([ev[0] for ev in self.events])

    def merged_sets(self):
        """Merged block ids of every event, in order."""
        return [ev[1] for ev in self.events]

    def leaves(self, block_id):
        """Leaves descending from a block.

        Parameters
        ----------
        block_id : int

        Returns
        -------
        leaves : tuple of int
            Sorted leaf ids.

        """
        if not 0 <= block_id < self.n_blocks:
            raise exceptions.StructuralError(f'Unknown block {block_id}.')
        if self._children is None:
            self._children = {ev[2]: ev[1] for ev in self.events}
        stack = [block_id]
        out = []
        while stack:
            b = stack.pop()
            if b < self.n:
                out.append(b)
            else:
                stack.extend(self._children[b])
        return tuple(sorted(out))


class MutationSet:
    """Mutations on the branches of one genealogy.

    Parameters
    ----------
    log : `EventLog`
        The genealogy.

    block_ids, times : array-like
        Carrying block and time of each mutation. Mutations on the
        ancestral line above the MRCA use the root id.

    theta : float or `None`
        Mutation rate; with ``rng``, the first mutation above the MRCA
        is drawn on demand.

    rng : `numpy.random.Generator` or `None`

    Raises
    ------
    obsclade.exceptions.StructuralError
        Unknown block, or a time outside the carrying block's lifetime.

    """
    def __init__(self, log, block_ids, times, theta=None, rng=None):
        block_ids = np.asarray(block_ids, dtype=np.int64)
        times = np.asarray(times, dtype=np.float64)
        if block_ids.shape != times.shape or block_ids.ndim != 1:
            raise exceptions.StructuralError(
                'Mutation block ids and times must be 1D and equally long.')
        bad = (block_ids < 0) | (block_ids >= log.n_blocks)
        if np.any(bad):
            raise exceptions.StructuralError(
                f'Mutations reference unknown blocks {block_ids[bad]}.')
        outside = ((times < log.birth[block_ids]) |
                   (times > log.death[block_ids]))
        if np.any(outside):
            i = np.flatnonzero(outside)[0]
            raise exceptions.StructuralError(
                f'Mutation at t={times[i]} lies outside the lifetime of '
                f'block {block_ids[i]}.')

        self.log = log
        self.block_ids = block_ids
        self.times = times
        self.theta = theta
        self._rng = rng
        self._first_root = None

    def __len__(self):
        return self.block_ids.size

    def counts(self):
        """Number of mutations per block."""
        return np.bincount(self.block_ids, minlength=self.log.n_blocks)

    @property
    def first_root_mutation(self):
        """Time of the first mutation above the MRCA.

        Drawn once on first access if not given explicitly; infinite if
        neither explicit nor drawable.

        """
        if self._first_root is None:
            on_root = self.times[self.block_ids == self.log.root]
            if on_root.size > 0:
                self._first_root = float(on_root.min())
            elif self._rng is not None and self.theta:
                self._first_root = self.log.tmrca + float(
                    self._rng.exponential(2.0 / self.theta))
            else:
                self._first_root = np.inf
        return self._first_root


class CladeStatsVector:
    """Per-leaf statistics of one replicate.

    Attributes
    ----------
    E : ndarray
        External branch length of each leaf.

    M : ndarray
        Size of the minimal clade of each leaf.

    O : ndarray
        Size of the minimal observable clade of each leaf.

    meta : dict
        Replicate metadata (seed, replicate, n, theta, measure).

    """
    def __init__(self, E, M, O, **meta):  # noqa: E741
        self.E = np.asarray(E, dtype=np.float64)
        self.M = np.asarray(M, dtype=np.int64)
        self.O = np.asarray(O, dtype=np.int64)  # noqa: E741
        self.meta = meta

    @property
    def n(self):
        return self.O.size

    def validate(self):
        """Check ``2 <= M <= O <= n`` and ``E > 0`` for every leaf.

        Raises
        ------
        obsclade.exceptions.StructuralError

        """
        n = self.n
        bad = ((self.M < 2) | (self.M > self.O) | (self.O > n) |
               ~(self.E > 0))
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise exceptions.StructuralError(
                f'Leaf {i}: E={self.E[i]}, M={self.M[i]}, O={self.O[i]} '
                f'violates 2 <= M <= O <= {n}, E > 0.')

    def to_table(self, replicate=0):
        """Rows ``replicate, leaf, E, M, O`` with 1-based leaf labels."""
        return Table([np.full(self.n, replicate), np.arange(1, self.n + 1),
                      self.E, self.M, self.O],
                     names=('replicate', 'leaf', 'E', 'M', 'O'))


def simulate_genealogy(n, rates, seed, growth_rate=0.0):
    """Simulate a Lambda-n-coalescent to its MRCA by jump-hold steps.

    With ``b`` blocks the waiting time is exponential with rate
    ``lambda_b``, the merger size ``k`` has probability
    ``C(b, k) lambda_{b,k} / lambda_b``, and the ``k`` blocks are
    picked uniformly without replacement.

    Parameters
    ----------
    n : int
        Number of leaves.

    rates : `~obsclade.ratetable.RateTable`
        Rates covering ``n``.

    seed : int, `numpy.random.SeedSequence`, or `numpy.random.Generator`
        Random stream; identical seeds give identical logs.

    growth_rate : float
        Exponential growth rate. Event times are mapped to real time by
        ``log(1 + growth_rate * t) / growth_rate``; the jump chain does
        not change.

    Returns
    -------
    log : `EventLog`

    Raises
    ------
    obsclade.exceptions.PreconditionError
        ``n`` exceeds the rate table, or ``growth_rate < 0``.

    """
    if n < 2 or n > rates.n_max:
        raise exceptions.PreconditionError(
            f'Sample size {n} outside rate table range [2, {rates.n_max}].')
    if growth_rate < 0:
        raise exceptions.PreconditionError(
            f'Growth rate must be non-negative, got {growth_rate}.')

    rng = make_generator(seed)
    alive = list(range(n))
    next_id = n
    t = 0.0
    events = []

    while len(alive) > 1:
        b = len(alive)
        t += rng.exponential(1.0 / rates.totals[b])
        k = rates.sample_merger_size(b, rng.random())
        idx = rng.choice(b, size=k, replace=False)
        merged = tuple(sorted(alive[i] for i in idx))
        for i in sorted(idx, reverse=True):
            alive[i] = alive[-1]
            alive.pop()
        alive.append(next_id)
        events.append((growth_time(t, growth_rate), merged, next_id))
        next_id += 1

    log.debug(f'Simulated n={n} genealogy with {len(events)} events')
    return EventLog(n, events)


def place_mutations(log, theta, seed):
    """Place infinite-sites mutations with rate ``theta / 2`` per branch.

    Each branch carries a Poisson number of mutations with mean
    ``theta / 2`` times its length, at uniform times in its lifetime.
    The ancestral line above the MRCA is extended lazily, see
    `MutationSet.first_root_mutation`.

    Parameters
    ----------
    log : `EventLog`

    theta : float
        Positive mutation rate.

    seed : int, `numpy.random.SeedSequence`, or `numpy.random.Generator`

    Returns
    -------
    muts : `MutationSet`

    """
    if not theta > 0:
        raise exceptions.PreconditionError(
            f'theta must be positive, got {theta}.')
    rng = make_generator(seed)
    root = log.root
    lengths = log.death[:root] - log.birth[:root]
    counts = rng.poisson(0.5 * theta * lengths)
    block_ids = np.repeat(np.arange(root), counts)
    times = log.birth[block_ids] + rng.random(block_ids.size) * lengths[
        block_ids]
    return MutationSet(log, block_ids, times, theta=theta, rng=rng)


def observable_clades(log, muts):
    """Per-leaf external branch length, minimal clade size and minimal
    observable clade size.

    For leaf ``i``, the minimal observable clade is the block of ``i``
    at its last jump before the first mutation strictly above its
    external branch. Mutations on the external branch itself are
    private and skipped. Without such a mutation below the MRCA, the
    clade is the whole sample.

    Parameters
    ----------
    log : `EventLog`

    muts : `MutationSet`
        Mutations placed on ``log``.

    Returns
    -------
    stats : `CladeStatsVector`

    Raises
    ------
    obsclade.exceptions.StructuralError
        ``muts`` belongs to another genealogy.

    """
    if muts.log is not log and muts.log != log:
        raise exceptions.StructuralError(
            'Mutations were not placed on this genealogy.')

    n = log.n
    root = log.root
    mutated = muts.counts() > 0

    # First mutated ancestor of every block, from the root down
    clade_block = np.empty(log.n_blocks, dtype=np.int64)
    clade_block[root] = root
    parent = log.parent
    for b in range(root - 1, n - 1, -1):
        clade_block[b] = b if mutated[b] else clade_block[parent[b]]

    leaf_parent = parent[:n]
    stats = CladeStatsVector(log.death[:n], log.size[leaf_parent],
                             log.size[clade_block[leaf_parent]],
                             n=n, theta=muts.theta)
    stats.validate()
    return stats


def simulate_replicate(n, rates, theta, seed, r, growth_rate=0.0):
    """Full pipeline for replicate ``r``: genealogy, mutations, clades.

    The genealogy uses child stream 0 and the mutations child stream 1
    of :func:`replicate_seed`.

    """
    ss = replicate_seed(seed, r)
    glog = simulate_genealogy(n, rates, child_seed(ss, 0),
                              growth_rate=growth_rate)
    muts = place_mutations(glog, theta, child_seed(ss, 1))
    stats = observable_clades(glog, muts)
    stats.meta.update(seed=seed, replicate=r, measure=repr(rates.spec),
                      growth_rate=growth_rate)
    return stats
