"""Select the stepper backend once, at import time.

The compiled extension is preferred; the numpy fallback is used when the
extension is absent or when SUMOPT_PURE_PYTHON is set (any non-empty
value). Both expose the same three functions with identical semantics.
"""

import os

if os.environ.get("SUMOPT_PURE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

sum_step = _impl.sum_step
zou_step = _impl.zou_step
yan_step = _impl.yan_step


def backend_name() -> str:
    return BACKEND
