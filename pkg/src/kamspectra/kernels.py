"""Kernel dispatch: the compiled core when it imports, otherwise the numpy fallback.

Set ``KAMSPECTRA_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("KAMSPECTRA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py

gap_scan = _impl.gap_scan
fill_matrix = _impl.fill_matrix
# numpy's vectorized atan2 beats the scalar libm loop of the compiled phase
# kernels (see benchmarks/bench_kernels.py), so the fallback serves both backends
winding_phase = _kernels_py.winding_phase
open_phase = _kernels_py.open_phase
