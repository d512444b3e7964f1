# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This module handles ``obsclade``-specific I/O for:

* CSV tables - See `astropy.io.ascii`
* JSON reports and experiment configurations

All writes go to a temporary file in the target directory first and
are then renamed into place, so readers never see partial output.

"""
# STDLIB
import json
import os
import tempfile
from pathlib import Path

# ASTROPY
from astropy import log
from astropy.time import Time

# LOCAL
from obsclade import exceptions

__all__ = ['resolve_filename', 'write_table', 'write_json', 'write_text',
           'write_metadata', 'read_config']


def resolve_filename(path, *args):
    """Resolve a local filename.

    Parameters
    ----------
    path : str
        Root directory.

    args : tuple of str
        Any sub-path(s) and the actual filename.

    Returns
    -------
    reg_filename : str
        Resolved filename.

    """
    return str(Path(path).expanduser().joinpath(*args))


def _atomic_write(filename, write):
    """Call ``write(tmpname)`` and move the result to ``filename``."""
    filename = Path(filename)
    filename.parent.mkdir(parents=True, exist_ok=True)
    fd, tmpname = tempfile.mkstemp(prefix=f'.{filename.name}.',
                                   suffix='.tmp', dir=filename.parent)
    os.close(fd)
    try:
        write(tmpname)
        os.replace(tmpname, filename)
    except BaseException:
        if os.path.exists(tmpname):
            os.remove(tmpname)
        raise
    log.info(f'Wrote {filename}')
    return str(filename)


def write_table(table, filename):
    """Write a table as CSV; masked cells are left empty.

    Parameters
    ----------
    table : `~astropy.table.Table`

    filename : str

    Returns
    -------
    filename : str

    """
    return _atomic_write(
        filename,
        lambda tmp: table.write(tmp, format='ascii.csv', overwrite=True))


def write_text(text, filename):
    """Write plain text."""
    def write(tmp):
        with open(tmp, 'w') as f:
            f.write(text)

    return _atomic_write(filename, write)


def write_json(obj, filename):
    """Write a JSON document with sorted keys."""
    return write_text(json.dumps(obj, indent=2, sort_keys=True) + '\n',
                      filename)


def write_metadata(outdir, mode, config):
    """Write the ``<mode>.meta.json`` sidecar.

    Run-dependent content (timestamp, version) lives only here, so the
    data files of identical runs are identical.

    Parameters
    ----------
    outdir : str

    mode : str

    config : dict
        Experiment configuration.

    """
    # Put here to avoid circular import error
    from obsclade import __version__

    meta = {'mode': mode,
            'timestamp': Time.now().isot,
            'version': __version__,
            'config': config}
    return write_json(meta, resolve_filename(outdir, f'{mode}.meta.json'))


def read_config(filename, overrides=None):
    """Read an experiment configuration from a JSON file.

    Parameters
    ----------
    filename : str

    overrides : dict or `None`
        Values that replace those of the file before validation.

    Returns
    -------
    config : `~obsclade.experiment.ExperimentConfig`

    Raises
    ------
    obsclade.exceptions.ConfigError
        Unreadable file, invalid JSON, or invalid fields. The message
        carries the line number where known.

    """
    # Put here to avoid circular import error
    from obsclade.experiment import ExperimentConfig

    try:
        with open(filename) as f:
            text = f.read()
    except OSError as e:
        raise exceptions.ConfigError(
            f'Cannot read configuration {filename}: {e}') from e
    return ExperimentConfig.from_json(text, overrides=overrides)
