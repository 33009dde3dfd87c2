"""Predictive-process-monitoring experimentation toolkit.

Python bindings over the C++ core: event-log model, temporal splitting,
trace encodings, prompt assembly/parsing, semantic hashing, beta-learner
baselines, and the statistical evaluation layer.
"""

try:
    from ppmkit._ppmkit import *  # noqa: F401,F403  (installed package layout)
    from ppmkit._ppmkit import __doc__ as _core_doc
except ImportError:  # in-tree builds put the extension on PYTHONPATH directly
    from _ppmkit import *  # noqa: F401,F403
    from _ppmkit import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
