"""Hot kernels: compiled extension when available, numpy fallback otherwise.

Set ``CHIRPLAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"

if not os.environ.get("CHIRPLAB_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels
    else:
        BACKEND = "cython"
else:
    _impl = _pykernels

transport_flow = _impl.transport_flow
q_episode = _impl.q_episode

__all__ = ["BACKEND", "transport_flow", "q_episode", "_pykernels"]
