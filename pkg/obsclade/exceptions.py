# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Custom exceptions for ``obsclade`` to raise."""

__all__ = ['ObscladeError', 'PreconditionError', 'IntegrationError',
           'RateIntegrationError', 'DustClassificationInconclusive',
           'DegenerateSpectrum', 'WrongRegime', 'UnsupportedMeasure',
           'StateSpaceTooLarge', 'StructuralError', 'ExplicitFormulaMismatch',
           'OracleError', 'ExperimentError', 'ConfigError']


class ObscladeError(Exception):
    """Base class for all ``obsclade`` errors."""
    pass


class PreconditionError(ObscladeError, ValueError):
    """Arguments outside the domain of an operation."""
    pass


class IntegrationError(ObscladeError):
    """Adaptive quadrature did not converge."""
    pass


class RateIntegrationError(IntegrationError):
    """Merger rate quadrature did not converge.

    Parameters
    ----------
    b, k : int
        Block count and merger size of the failed rate.

    msg : str
        Diagnostic from the integrator.

    """
    def __init__(self, b, k, msg=''):
        self.b = b
        self.k = k
        self.msg = msg
        super().__init__(
            f'Rate integration failed for b={b}, k={k}. {msg}'.rstrip())

    def __reduce__(self):
        return (self.__class__, (self.b, self.k, self.msg))


class DustClassificationInconclusive(ObscladeError):
    """Finiteness of the first inverse moment could not be decided."""
    pass


class DegenerateSpectrum(ObscladeError):
    """Two total merger rates coincide in an absorption mixture."""
    pass


class WrongRegime(ObscladeError):
    """Limit formula requested for a measure outside its regime."""
    pass


class UnsupportedMeasure(ObscladeError):
    """Measure not admissible for the requested operation."""
    pass


class StateSpaceTooLarge(ObscladeError):
    """Oracle state space would be too large to enumerate."""
    pass


class StructuralError(ObscladeError):
    """Inconsistent genealogy, mutation or statistic inputs."""
    pass


class ExplicitFormulaMismatch(ObscladeError):
    """General limit moment formula disagrees with its explicit form."""
    pass


class OracleError(ObscladeError):
    """Singular first-step system in the oracle."""
    pass


class ExperimentError(ObscladeError):
    """An experiment mode failed; wraps the underlying error."""
    pass


class ConfigError(ObscladeError, ValueError):
    """Invalid experiment configuration.

    Parameters
    ----------
    msg : str
        Description of the problem.

    field : str or `None`
        Offending configuration key.

    line : int or `None`
        Line number in the configuration file, if known.

    """
    def __init__(self, msg, field=None, line=None):
        self.msg = msg
        self.field = field
        self.line = line
        prefix = ''
        if line is not None:
            prefix += f'line {line}: '
        if field is not None:
            prefix += f'{field}: '
        super().__init__(prefix + msg)

    def __reduce__(self):
        return (self.__class__, (self.msg, self.field, self.line))
