"""Backend switch for the compiled solver kernels.

Set ``SRBO_BACKEND=numpy`` to force the pure-numpy kernels even when numba
is importable. The flag is read once, at import time.
"""
import os

BACKEND_ENV = "SRBO_BACKEND"

_requested = os.environ.get(BACKEND_ENV, "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba  # noqa: F401
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _requested == "numba"


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
