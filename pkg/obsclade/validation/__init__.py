# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""This sub-package is for acceptance tests: Monte Carlo estimates at
large sample sizes against exact moments and limits, and exact engines
against each other over the full grid of measures.

These are not collected by default. To run them from source checkout::

    OBSCLADE_RUN_SLOW=1 pytest obsclade/validation

Without ``OBSCLADE_RUN_SLOW``, only the cases that are not marked slow
run. ``OBSCLADE_THREADS`` sets the number of worker processes.

"""  # noqa

from . import utils  # noqa
