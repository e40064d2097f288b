"""Numerical laboratory for symplectic maps: normal forms, periodic-orbit
censuses, emergence estimation, an explicit high-emergence construction and
homoclinic renormalization."""
from ._version import __version__

__all__ = ["__version__"]
