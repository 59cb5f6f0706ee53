"""Stackelberg batch policy learning: python bindings over the C++ core."""

from ._core import *  # noqa: F401,F403
