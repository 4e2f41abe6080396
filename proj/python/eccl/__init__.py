# SPDX-License-Identifier: Apache-2.0
"""Tower-defense curriculum learning: engine, generators, agent and training loop."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
