"""Hot data-movement kernels with a numba fast path and a pure-numpy fallback.

The convolution layers are built as per-offset GEMMs: for every kernel tap the
input is packed into a contiguous matrix, multiplied against one weight slice
with BLAS, and accumulated into the output. Packing, accumulation and 2x2 max
pooling are the memory-bound inner loops; both backends implement the same
four primitives with bit-identical accumulation order.

Backend selection: environment variable ``SPLITSIM_KERNELS`` set to ``numba``,
``numpy`` or ``auto`` (default). ``auto`` uses numba when it imports cleanly.
The choice is made once at import time.
"""

import os

from . import numpy_ops

_CHOICE = os.environ.get("SPLITSIM_KERNELS", "auto").lower()

if _CHOICE not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"SPLITSIM_KERNELS must be 'auto', 'numba' or 'numpy', got {_CHOICE!r}"
    )

_numba_ops = None
if _CHOICE in ("auto", "numba"):
    try:
        from . import numba_ops as _numba_ops
    except ImportError:
        if _CHOICE == "numba":
            raise
        _numba_ops = None

_impl = _numba_ops if _numba_ops is not None else numpy_ops

BACKEND = "numba" if _numba_ops is not None else "numpy"

gather_patch = _impl.gather_patch
scatter_patch_add = _impl.scatter_patch_add
maxpool2x2 = _impl.maxpool2x2
maxpool2x2_backward = _impl.maxpool2x2_backward
adam_update = _impl.adam_update


def backend_name() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return BACKEND
