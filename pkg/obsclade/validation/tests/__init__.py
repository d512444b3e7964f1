# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""Acceptance tests for ``obsclade`` engines and samplers."""
