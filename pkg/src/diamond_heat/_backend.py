"""Select the compiled kernel sums when available, else the numpy fallback.

Set ``DIAMOND_HEAT_BACKEND`` to ``python`` to force the fallback, or to
``cython`` to fail loudly when the extension is missing.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels

_choice = os.environ.get("DIAMOND_HEAT_BACKEND", "auto").lower()
if _choice not in ("auto", "python", "cython"):
    raise ImportError(f"DIAMOND_HEAT_BACKEND must be auto, python or cython, got {_choice!r}")
if _choice == "cython" and _ckernels is None:
    raise ImportError("DIAMOND_HEAT_BACKEND=cython but the compiled extension is not built")

NAME = "python" if _choice == "python" or _ckernels is None else "cython"
kernels = BACKENDS[NAME]
