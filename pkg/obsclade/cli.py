# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Command-line interface, installed as ``obsclade``.

Exit codes are 0 on success, 2 if a Monte Carlo comparison failed and 1
on any error.

"""
# STDLIB
import argparse
import json
import sys

# ASTROPY
from astropy import log

# LOCAL
from obsclade import exceptions
from obsclade.experiment import MODES, ExperimentConfig, run_experiment
from obsclade.stio import read_config

__all__ = ['main', 'parse_measure']


def parse_measure(text):
    """Measure from a JSON object or a bare name such as ``uniform``."""
    text = text.strip()
    if text.startswith('{'):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise argparse.ArgumentTypeError(
                f'invalid measure JSON: {e.msg}') from e
    return {'measure': text}


def add_global_arguments(parser):
    parser.add_argument('--config', help='JSON experiment configuration')
    parser.add_argument('--seed', type=int, help='master seed')
    parser.add_argument('--threads', type=int, help='worker processes')
    parser.add_argument('--out', help='output directory')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='log debug messages')


def add_mode_arguments(parser, mode):
    parser.add_argument('-n', type=int, nargs='+' if mode == 'convergence'
                        else None, help='sample size')
    parser.add_argument('--measure', type=parse_measure,
                        help='measure as JSON or name, e.g. kingman')
    if mode != 'rates':
        parser.add_argument('--theta', type=float, help='mutation rate')
    if mode in ('simulate', 'compare', 'convergence'):
        parser.add_argument('--replicates', type=int)
        parser.add_argument('--fast', action='store_true', default=None,
                            help='use the single-leaf samplers')
    if mode in ('simulate', 'asymptotics', 'convergence'):
        parser.add_argument('--rho', type=float, help='growth rate')
    if mode in ('moments', 'compare'):
        parser.add_argument('--j-max', dest='j_max', type=int)
    if mode in ('asymptotics', 'compare', 'convergence'):
        parser.add_argument('--k-max', dest='k_max', type=int)
    if mode in ('compare', 'convergence'):
        parser.add_argument('--slack', type=float)
    if mode == 'moments':
        parser.add_argument('--oracle', action='store_true', default=None,
                            help=argparse.SUPPRESS)


class ArgumentParser(argparse.ArgumentParser):
    """Parser that reports usage errors as `~obsclade.exceptions.ConfigError`
    instead of exiting with status 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise exceptions.ConfigError(message)


def make_parser():
    parser = ArgumentParser(
        prog='obsclade',
        description='Minimal observable clades of Lambda-coalescents.')
    add_global_arguments(parser)
    subparsers = parser.add_subparsers(dest='mode', required=True)
    for mode in MODES:
        add_mode_arguments(subparsers.add_parser(mode), mode)
    return parser


def build_config(args):
    """Merge a configuration file with command-line flags; flags win."""
    d = {'mode': args.mode}
    for key in ('seed', 'threads', 'out', 'n', 'measure', 'theta',
                'replicates', 'fast', 'rho', 'j_max', 'k_max', 'slack',
                'oracle'):
        value = getattr(args, key, None)
        if value is not None:
            d[key] = value
    if isinstance(d.get('n'), list) and len(d['n']) == 1:
        d['n'] = d['n'][0]
    if args.config:
        return read_config(args.config, overrides=d)
    return ExperimentConfig.from_dict(d)


def main(args=None):
    parser = make_parser()
    try:
        args = parser.parse_args(args)
    except exceptions.ConfigError as e:
        log.error(str(e))
        return 1
    if args.verbose:
        log.setLevel('DEBUG')
    try:
        return run_experiment(build_config(args))
    except exceptions.ObscladeError as e:
        log.error(str(e))
        return 1


if __name__ == '__main__':
    sys.exit(main())
