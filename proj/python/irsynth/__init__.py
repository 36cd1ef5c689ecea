"""Infrared small-target dataset synthesis and evaluation toolkit."""

from ._irsynth import *  # noqa: F401,F403
from ._irsynth import IrsynthError, Rect, AffParams  # noqa: F401

__version__ = "0.1.0"
