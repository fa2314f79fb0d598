"""Solver core with a compiled fast path.

``smo_solve`` resolves at import time to the Cython extension when it has
been built (``python setup.py build_ext --inplace``), else to the numpy
fallback. Both produce bit-identical results; only speed differs. Set
``ONSETML_BACKEND=pure`` or ``=native`` to force a choice.
"""

import os

from . import pure

_requested = os.environ.get("ONSETML_BACKEND", "").strip().lower()

if _requested == "pure":
    _impl = pure
else:
    try:
        from . import _native as _impl
    except ImportError:
        if _requested == "native":
            raise ImportError(
                "ONSETML_BACKEND=native but the compiled core is not built; "
                "run: python setup.py build_ext --inplace"
            ) from None
        _impl = pure

BACKEND = _impl.BACKEND_NAME
smo_solve = _impl.smo_solve

__all__ = ["BACKEND", "smo_solve", "pure"]
