"""LIF kernel backends.

The compiled Cython kernel is preferred when present; the numpy fallback
is selected otherwise, or when NEUROVIRT_PURE_PYTHON is set. Both produce
bit-identical results (see benchmarks/kernel_bench.py for the comparison).
"""

import os

from neurovirt._kernels.lif_py import lif_step as _lif_step_py

_force_py = os.environ.get("NEUROVIRT_PURE_PYTHON", "") not in ("", "0")

if not _force_py:
    try:
        from neurovirt._kernels._lif_cy import lif_step  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        lif_step = _lif_step_py
        BACKEND = "python"
else:
    lif_step = _lif_step_py
    BACKEND = "python"


def available_backends() -> dict[str, object]:
    """Name -> kernel callable for every importable backend."""
    backends: dict[str, object] = {"python": _lif_step_py}
    try:
        from neurovirt._kernels import _lif_cy  # type: ignore[attr-defined]

        backends["cython"] = _lif_cy.lif_step
    except ImportError:
        pass
    return backends
