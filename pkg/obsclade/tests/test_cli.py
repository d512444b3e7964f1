# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Test cli.py module."""

# STDLIB
import argparse
import json

# THIRD-PARTY
import pytest

# LOCAL
from obsclade import cli, exceptions


@pytest.mark.parametrize(
    ('text', 'ans'),
    [('kingman', {'measure': 'kingman'}),
     (' uniform ', {'measure': 'uniform'}),
     ('{"measure": "dirac", "p": 0.5}', {'measure': 'dirac', 'p': 0.5})])
def test_parse_measure(text, ans):
    assert cli.parse_measure(text) == ans


def test_parse_measure_bad():
    with pytest.raises(argparse.ArgumentTypeError):
        cli.parse_measure('{"measure": ')


class TestBuildConfig:
    def setup_class(self):
        self.parser = cli.make_parser()

    def test_flags(self):
        args = self.parser.parse_args(
            ['--seed', '3', 'convergence', '-n', '20', '--measure', 'uniform',
             '--theta', '1', '--fast'])
        cfg = cli.build_config(args)
        assert cfg.mode == 'convergence'
        assert cfg.seed == 3
        assert cfg.n == 20
        assert cfg.sizes == [2, 5, 10, 20]
        assert cfg.fast is True

    def test_n_list(self):
        args = self.parser.parse_args(
            ['convergence', '-n', '8', '16', '--measure', 'kingman',
             '--theta', '1'])
        assert cli.build_config(args).n == [8, 16]

    def test_defaults_kept(self):
        """Flags that are not given leave the defaults alone."""
        args = self.parser.parse_args(
            ['simulate', '-n', '5', '--measure', 'kingman', '--theta', '1'])
        cfg = cli.build_config(args)
        assert cfg.fast is False
        assert cfg.replicates == 1000

    def test_mode_flags(self):
        with pytest.raises(exceptions.ConfigError, match='unrecognized'):
            self.parser.parse_args(['rates', '-n', '5', '--measure',
                                    'kingman', '--theta', '1'])


class TestMain:
    def test_rates(self, tmp_path):
        code = cli.main(['--out', str(tmp_path), 'rates', '-n', '4',
                         '--measure', 'uniform'])
        assert code == 0
        assert (tmp_path / 'rates.csv').exists()
        assert (tmp_path / 'rates.meta.json').exists()

    def test_config_file(self, tmp_path):
        fname = tmp_path / 'cfg.json'
        fname.write_text(json.dumps({'mode': 'asymptotics',
                                     'measure': {'measure': 'kingman'},
                                     'theta': 1.0, 'k_max': 1}))
        out = tmp_path / 'out'
        code = cli.main(['--config', str(fname), '--out', str(out),
                         'moments', '-n', '4', '--theta', '2'])
        assert code == 0
        with open(out / 'moments.meta.json') as f:
            meta = json.load(f)
        assert meta['config']['mode'] == 'moments'
        assert meta['config']['theta'] == 2.0
        assert meta['config']['k_max'] == 1

    @pytest.mark.parametrize(
        'argv',
        [['moments', '-n', '5', '--measure', 'uniform'],
         ['moments', '-n', '5', '--measure', 'nope', '--theta', '1'],
         ['asymptotics', '--measure', '{"measure": "dirac", "p": 1}',
          '--theta', '1'],
         ['--config', 'missing.json', 'rates'],
         ['moments', '-n', '5', '--theta', '1', '--measure', '{bad'],
         ['moments', '-n', '5', '--measure', 'kingman', '--theta', 'abc'],
         ['plot', '-n', '5']])
    def test_errors(self, tmp_path, argv):
        assert cli.main(['--out', str(tmp_path)] + argv) == 1
        assert not (tmp_path / 'moments.csv').exists()

    def test_help(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(['--help'])
        assert excinfo.value.code == 0
        assert 'obsclade' in capsys.readouterr().out
