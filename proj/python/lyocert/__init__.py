"""Desk-scale certification of classical and integral stability properties
of disturbed dynamical systems: comparison-function algebra, KL envelopes,
trajectory-integral Lyapunov construction, and the stability implication
lattice."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
