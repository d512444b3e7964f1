# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles experiment configurations and runs them.

An experiment is one of the modes ``rates``, ``simulate``, ``moments``,
``asymptotics``, ``compare`` and ``convergence``. Each mode writes its
tables into the output directory, plus a ``<mode>.meta.json`` sidecar.

"""
# STDLIB
import json
import numbers
import re

# THIRD-PARTY
import numpy as np

# ASTROPY
from astropy import log
from astropy.table import MaskedColumn, Table

# LOCAL
from obsclade import exceptions
from obsclade.asymptotics import limit_moments
from obsclade.config import conf
from obsclade.measure import LambdaMeasure, Uniform, measure_from_dict
from obsclade.moments import compute_moments
from obsclade.oracle import exact_moments_dp
from obsclade.ratetable import get_rate_table
from obsclade.report import adjudicate_beta_law, compare, errata_notes
from obsclade.samplers import MonteCarloSummary, run_replicates
from obsclade.stio import (resolve_filename, write_json, write_metadata,
                           write_table, write_text)

__all__ = ['MODES', 'ExperimentConfig', 'run_experiment', 'n_ladder']

MODES = ('rates', 'simulate', 'moments', 'asymptotics', 'compare',
         'convergence')

_FIELDS = ('mode', 'measure', 'n', 'theta', 'replicates', 'seed', 'j_max',
           'k_max', 'rho', 'threads', 'out', 'fast', 'oracle', 'slack')


def _key_line(text, key):
    """Line number of the first ``"key":`` in a JSON document."""
    match = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    if match is None:
        return None
    return text.count('\n', 0, match.start()) + 1


def _as_int(value, field, lo, hi=None, line=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise exceptions.ConfigError(
            f'Expected an integer, got {value!r}.', field=field, line=line)
    if value < lo or (hi is not None and value > hi):
        bounds = f'[{lo}, {hi}]' if hi is not None else f'>= {lo}'
        raise exceptions.ConfigError(
            f'Value {value} outside {bounds}.', field=field, line=line)
    return int(value)


def _as_float(value, field, lo, strict=False, line=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise exceptions.ConfigError(
            f'Expected a number, got {value!r}.', field=field, line=line)
    value = float(value)
    if not np.isfinite(value) or value < lo or (strict and value == lo):
        raise exceptions.ConfigError(
            f'Value {value} must be {">" if strict else ">="} {lo} and '
            'finite.', field=field, line=line)
    return value


def _as_bool(value, field, line=None):
    if not isinstance(value, bool):
        raise exceptions.ConfigError(
            f'Expected true or false, got {value!r}.', field=field,
            line=line)
    return value


def n_ladder(n):
    """Sample sizes ``max(2, n // 2**i)``, increasing, ending at ``n``."""
    ladder = set()
    m = n
    while m >= 2:
        ladder.add(m)
        m //= 2
    ladder.add(2)
    return sorted(ladder)


class ExperimentConfig:
    """Validated parameters of one experiment.

    Parameters
    ----------
    mode : str
        One of `MODES`.

    measure : dict or `~obsclade.measure.LambdaMeasure`
        JSON measure object, see
        :func:`~obsclade.measure.measure_from_dict`.

    n : int or list of int
        Sample size. A list is accepted by ``convergence`` only; an int
        there expands to :func:`n_ladder`. Not needed by
        ``asymptotics``.

    theta : float
        Mutation rate. Not needed by ``rates``.

    replicates : int
        Monte Carlo replicates.

    seed : int
        Master seed in ``[0, 2**64)``.

    j_max, k_max : int
        Largest moment exponents for finite-n and limit moments.

    rho : float
        Exponential growth rate.

    threads : int or `None`
        Worker processes. Default is ``conf.threads``.

    out : str
        Output directory.

    fast : bool
        Use the fast single-leaf samplers instead of full genealogies.

    oracle : bool
        Add oracle columns to ``moments`` output.

    slack : float or `None`
        Additive slack for limit comparisons. Default is
        ``conf.finite_n_slack``.

    Raises
    ------
    obsclade.exceptions.ConfigError
        A field is missing or invalid.

    """
    def __init__(self, mode, measure, n=None, theta=None, replicates=1000,
                 seed=0, j_max=2, k_max=2, rho=0.0, threads=None, out='.',
                 fast=False, oracle=False, slack=None, lines=None):
        lines = lines or {}

        if mode not in MODES:
            raise exceptions.ConfigError(
                f'Unknown mode {mode!r}, expected one of {MODES}.',
                field='mode', line=lines.get('mode'))
        self.mode = mode

        if measure is None:
            raise exceptions.ConfigError('Missing measure.', field='measure',
                                         line=lines.get('measure'))
        try:
            self.spec = measure_from_dict(measure)
        except exceptions.ConfigError as e:
            raise exceptions.ConfigError(
                e.msg, field='measure',
                line=lines.get('measure')) from e
        self.measure = (measure if isinstance(measure, LambdaMeasure)
                        else dict(measure))

        if n is None:
            if mode != 'asymptotics':
                raise exceptions.ConfigError(
                    f'Mode {mode} needs n.', field='n', line=lines.get('n'))
        elif isinstance(n, (list, tuple)):
            if mode != 'convergence':
                raise exceptions.ConfigError(
                    'A list of sample sizes is only valid for convergence.',
                    field='n', line=lines.get('n'))
            if not n:
                raise exceptions.ConfigError(
                    'Empty list of sample sizes.', field='n',
                    line=lines.get('n'))
            n = [_as_int(m, 'n', 2, line=lines.get('n')) for m in n]
        else:
            n = _as_int(n, 'n', 2, line=lines.get('n'))
        self.n = n

        if theta is None:
            if mode != 'rates':
                raise exceptions.ConfigError(
                    f'Mode {mode} needs theta.', field='theta',
                    line=lines.get('theta'))
        else:
            theta = _as_float(theta, 'theta', 0, strict=True,
                              line=lines.get('theta'))
        self.theta = theta

        self.replicates = _as_int(replicates, 'replicates', 1,
                                  line=lines.get('replicates'))
        self.seed = _as_int(seed, 'seed', 0, 2 ** 64 - 1,
                            line=lines.get('seed'))
        self.j_max = _as_int(j_max, 'j_max', 1, line=lines.get('j_max'))
        self.k_max = _as_int(k_max, 'k_max', 1, line=lines.get('k_max'))
        self.rho = _as_float(rho, 'rho', 0, line=lines.get('rho'))
        self.threads = _as_int(conf.threads if threads is None else threads,
                               'threads', 1, line=lines.get('threads'))
        if not isinstance(out, str):
            raise exceptions.ConfigError(
                f'Expected a directory name, got {out!r}.', field='out',
                line=lines.get('out'))
        self.out = out
        self.fast = _as_bool(fast, 'fast', line=lines.get('fast'))
        self.oracle = _as_bool(oracle, 'oracle', line=lines.get('oracle'))
        self.slack = _as_float(conf.finite_n_slack if slack is None
                               else slack, 'slack', 0,
                               line=lines.get('slack'))

    def __repr__(self):
        return f'ExperimentConfig({self.to_dict()})'

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return (self.spec == other.spec and
                self._plain_dict() == other._plain_dict())

    def _plain_dict(self):
        d = {key: getattr(self, key) for key in _FIELDS if key != 'measure'}
        if isinstance(d['n'], tuple):
            d['n'] = list(d['n'])
        return d

    @property
    def sizes(self):
        """Sample sizes of the run, as a list."""
        if self.n is None:
            return []
        if isinstance(self.n, list):
            return sorted(set(self.n))
        if self.mode == 'convergence':
            return n_ladder(self.n)
        return [self.n]

    def to_dict(self):
        """JSON-compatible dictionary; see :meth:`from_dict`."""
        d = self._plain_dict()
        if isinstance(self.measure, LambdaMeasure):
            d['measure'] = self.measure.to_dict()
        else:
            d['measure'] = dict(self.measure)
        return {key: d[key] for key in _FIELDS if d[key] is not None}

    @classmethod
    def from_dict(cls, d, lines=None):
        """Build from a dictionary; unknown keys are rejected.

        Parameters
        ----------
        d : dict

        lines : dict or `None`
            Line number of each key in its source file.

        """
        lines = lines or {}
        if not isinstance(d, dict):
            raise exceptions.ConfigError(
                f'Expected a JSON object, got {type(d).__name__}.')
        unknown = sorted(set(d) - set(_FIELDS))
        if unknown:
            raise exceptions.ConfigError(
                f'Unknown key{"s" if len(unknown) > 1 else ""} {unknown}.',
                field=unknown[0], line=lines.get(unknown[0]))
        if 'mode' not in d:
            raise exceptions.ConfigError('Missing mode.', field='mode')
        return cls(lines=lines, **d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text, overrides=None):
        """Parse a JSON document, keeping line numbers for diagnostics.

        ``overrides`` replace values of the document before validation.

        """
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise exceptions.ConfigError(
                f'Invalid JSON: {e.msg}.', line=e.lineno) from e
        lines = {}
        if isinstance(d, dict):
            lines = {key: _key_line(text, key) for key in d}
            d.update(overrides or {})
        return cls.from_dict(d, lines=lines)


def _out(config, name):
    return resolve_filename(config.out, name)


def _run_rates(config):
    rates = get_rate_table(config.spec, config.n)
    write_table(rates.to_table(config.n), _out(config, 'rates.csv'))
    return 0


def _simulate(config, n, kind, powers=2):
    return run_replicates(kind, n, config.spec, config.theta,
                          config.replicates, seed=config.seed,
                          growth_rate=config.rho, threads=config.threads,
                          powers=powers)


def _run_simulate(config):
    n = config.n
    results = _simulate(config, n, 'fast' if config.fast else 'full')
    if config.fast:
        draws = np.array(results, dtype=np.int64).reshape(-1, 2)
        tab = Table([np.arange(config.replicates), draws[:, 0], draws[:, 1]],
                    names=('replicate', 'O1', 'X'))
    else:
        tab = Table([np.repeat(np.arange(config.replicates), n),
                     np.tile(np.arange(1, n + 1), config.replicates),
                     np.concatenate([s.E for s in results]),
                     np.concatenate([s.M for s in results]),
                     np.concatenate([s.O for s in results])],
                    names=('replicate', 'leaf', 'E', 'M', 'O'))
    write_table(tab, _out(config, 'simulate.csv'))
    return 0


def _run_moments(config):
    n = config.n
    rates = get_rate_table(config.spec, max(n, 3))
    table = compute_moments(n, config.j_max, config.theta, rates)
    table.validate()

    oracle = None
    if config.oracle:
        oracle = {m: exact_moments_dp(m, config.j_max, config.theta, rates)
                  for m in range(2, min(n, conf.oracle_max_n) + 1)}
    write_table(table.to_table(oracle=oracle), _out(config, 'moments.csv'))

    notes = errata_notes(('o_binomial', 'x_recursion'), theta=config.theta,
                         rates=rates)
    write_text('\n\n'.join(notes) + '\n', _out(config, 'errata.txt'))
    return 0


def _run_asymptotics(config):
    rates = get_rate_table(config.spec, max(config.k_max + 1, 3))
    results = limit_moments(config.k_max, config.theta, rates, rho=config.rho)
    tab = Table([[r.k for r in results], [r.value for r in results],
                 [r.method for r in results]], names=('k', 'value', 'method'))
    write_table(tab, _out(config, 'asymptotics.csv'))

    topics = []
    if config.rho == 0 and isinstance(config.spec, Uniform):
        topics.append('beta_law')
    if results[0].method == 'dust_series':
        topics.append('dust_constant')
    if topics:
        notes = errata_notes(topics, theta=config.theta, spec=config.spec)
        write_text('\n\n'.join(notes) + '\n', _out(config, 'errata.txt'))
    return 0


def _summary(config, n):
    if config.fast:
        results = _simulate(config, n, 'fast')
        return MonteCarloSummary.from_fast(results, n, j_max=config.j_max,
                                           k_max=config.k_max)
    powers = max(config.j_max, config.k_max)
    results = _simulate(config, n, 'leaf_powers', powers=powers)
    return MonteCarloSummary.from_leaf_powers(
        results, n, j_max=config.j_max, k_max=config.k_max)


def _write_report(report, config, stem):
    write_table(report.to_table(), _out(config, f'{stem}.csv'))
    write_json(report.to_dict(), _out(config, f'{stem}.json'))


def _run_compare(config):
    if config.rho > 0:
        raise exceptions.ConfigError(
            'Finite-n moments are only available without growth.',
            field='rho')
    n = config.n
    rates = get_rate_table(config.spec, n)
    table = compute_moments(n, config.j_max, config.theta, rates)
    mc = _summary(config, n)
    targets = {key: val for key, val in table.targets(n).items()
               if key in mc}
    report = compare(targets, mc, n=n)
    _write_report(report, config, 'compare')
    return report.exit_code


def _run_convergence(config):
    sizes = config.sizes
    rates = get_rate_table(config.spec, max(sizes + [config.k_max + 1]))
    limits = limit_moments(config.k_max, config.theta, rates, rho=config.rho)
    by_id = {res.statistic_id: res for res in limits}

    rows = []
    mc = None
    for n in sizes:
        log.info(f'Convergence: n={n}')
        mc = _summary(config, n)
        for k in range(1, config.k_max + 1):
            stat_id = f'E[(O/n)^{k}]'
            res = by_id.get(stat_id)
            rows.append((n, stat_id, mc.mean(stat_id), mc.stderr(stat_id),
                         np.nan if res is None else res.value,
                         '' if res is None else res.method))

    cols = list(zip(*rows))
    tab = Table([cols[0], cols[1], cols[2], cols[3]],
                names=('n', 'statistic', 'estimate', 'stderr'))
    limit = np.array(cols[4], dtype=np.float64)
    tab['limit'] = MaskedColumn(limit, mask=np.isnan(limit))
    tab['method'] = cols[5]
    write_table(tab, _out(config, 'convergence.csv'))

    # Largest n against the limit
    adjudicate = (config.rho == 0 and isinstance(config.spec, Uniform) and
                  config.k_max >= 2)
    report = compare([res for res in limits
                      if not (adjudicate and res.k == 2)],
                     mc, slack=config.slack)
    if adjudicate:
        report.extend(adjudicate_beta_law(mc, config.theta,
                                          slack=config.slack))
    _write_report(report, config, 'convergence_report')
    return report.exit_code


_RUNNERS = {'rates': _run_rates,
            'simulate': _run_simulate,
            'moments': _run_moments,
            'asymptotics': _run_asymptotics,
            'compare': _run_compare,
            'convergence': _run_convergence}


def run_experiment(config):
    """Run one experiment and write its outputs.

    Parameters
    ----------
    config : `ExperimentConfig` or dict

    Returns
    -------
    exit_code : int
        0 on success, 2 if a comparison failed.

    Raises
    ------
    obsclade.exceptions.ConfigError
        Invalid configuration.

    obsclade.exceptions.ExperimentError
        Any other failure, with the mode in the message.

    """
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_dict(config)

    log.info(f'Running {config.mode} for {config.spec!r}')
    try:
        code = _RUNNERS[config.mode](config)
    except exceptions.ConfigError:
        raise
    except exceptions.ObscladeError as e:
        raise exceptions.ExperimentError(
            f'Mode {config.mode} failed: {e.__class__.__name__}: {e}') from e

    try:
        meta_config = config.to_dict()
    except exceptions.UnsupportedMeasure:
        meta_config = dict(config._plain_dict(), measure=repr(config.spec))
    write_metadata(config.out, config.mode, meta_config)
    return code
