# Licensed under a 3-clause BSD style license - see LICENSE.rst
"""
This packages contains package tests.
"""
