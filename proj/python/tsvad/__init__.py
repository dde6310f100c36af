"""Two-stream video anomaly detection.

A knowledge-retrieval stream built on a trainable locality-sensitive hash
knowledge base, fused with a context-recovery stream that scores frames by
their maximum local prediction error.
"""

from tsvad._core import *  # noqa: F401,F403
from tsvad._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
