"""Separable reduced actions of the three-dimensional quantum stationary Hamilton-Jacobi equation."""

from ._qshje import *  # noqa: F401,F403
from ._qshje import cli  # noqa: F401

__version__ = "0.1.0"
