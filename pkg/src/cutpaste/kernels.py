"""Backend selection for the compiled kernels.

The compiled extension is preferred when importable; set CUTPASTE_PURE_PYTHON=1
to force the pure-Python reference implementation. Both backends consume
random draws in the same order, so a fixed seed gives identical paths.
"""

from __future__ import annotations

import os

from . import _kernels_py

_IMPL = _kernels_py
if not os.environ.get("CUTPASTE_PURE_PYTHON"):
    try:
        from . import _kernels_cy as _IMPL  # type: ignore[no-redef]
    except ImportError:
        pass

BACKEND = "python" if _IMPL is _kernels_py else "cython"

apply_matrix_rows = _IMPL.apply_matrix_rows
iterate_chain = _IMPL.iterate_chain
flip_interval = _IMPL.flip_interval


def available_backends() -> dict[str, object]:
    """Importable backend modules, keyed by name (for tests and benchmarks)."""
    out: dict[str, object] = {"python": _kernels_py}
    try:
        from . import _kernels_cy

        out["cython"] = _kernels_cy
    except ImportError:
        pass
    return out
