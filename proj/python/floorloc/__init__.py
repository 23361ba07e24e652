"""Floor-texture localization with graph convolutional embeddings.

Thin Python layer over the C++ core. Errors raised by the core surface as
subclasses of :class:`FloorlocError`.
"""

from ._floorloc import *  # noqa: F401,F403
from ._floorloc import __doc__  # noqa: F401

__all__ = [name for name in dir() if not name.startswith("_")]
