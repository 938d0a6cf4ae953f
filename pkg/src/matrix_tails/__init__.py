"""Tail bounds, samplers and verification tools for sums of random matrices."""

__version__ = "0.1.0"

from . import bounds, ensembles, linalg, verify  # noqa: E402,F401
