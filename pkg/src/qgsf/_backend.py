"""Pick the compiled kernels when available, else the pure-Python ones.

Set ``QGSF_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _core_py

BACKEND = "python"
_impl = _core_py

if os.environ.get("QGSF_BACKEND", "").lower() != "python":
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

simulate_events = _impl.simulate_events
fast_recursion = _impl.fast_recursion

__all__ = ["BACKEND", "simulate_events", "fast_recursion"]
