"""Python access to the mpsumm pipeline core."""

from ._mpsumm import *  # noqa: F401,F403
from ._mpsumm import MpsummError, Provider

__all__ = [name for name in dir() if not name.startswith("_")]
