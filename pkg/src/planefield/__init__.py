"""Planar Poisson random fields: distributions, samplers and verification."""

from planefield.__version__ import __version__

__all__ = ["__version__"]
