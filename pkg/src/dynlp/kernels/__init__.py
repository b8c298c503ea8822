"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback
is used otherwise.  DYNLP_KERNELS=python|compiled forces a backend
(forcing `compiled` raises if the extension is missing).
"""

import os

from . import _py
from ._ragged import gather_neighbors, row_positions

try:
    from . import _csr
except ImportError:
    _csr = None

_forced = os.environ.get("DYNLP_KERNELS", "").strip().lower()
if _forced in ("python", "py"):
    _impl = _py
elif _forced in ("compiled", "csr", "c"):
    if _csr is None:
        raise ImportError("DYNLP_KERNELS=compiled but the extension is not built")
    _impl = _csr
else:
    _impl = _csr if _csr is not None else _py

jacobi_step = _impl.jacobi_step
gauss_seidel_step = _impl.gauss_seidel_step
jacobi_run = _impl.jacobi_run

BACKEND = "compiled" if _impl is _csr else "python"


def available_backends():
    """Name -> module for every importable backend (used by tests/benchmarks)."""
    out = {"python": _py}
    if _csr is not None:
        out["compiled"] = _csr
    return out
