"""Kernel backend selection.

Set ``SMPFPT_DISABLE_JIT=1`` before import to force the pure-numpy kernels;
otherwise numba is used whenever it imports cleanly.
"""

import os

DISABLE_ENV = "SMPFPT_DISABLE_JIT"


def _jit_requested():
    return os.environ.get(DISABLE_ENV, "").strip().lower() not in {"1", "true", "yes", "on"}


if _jit_requested():
    try:
        from smpfpt import _jit as kernels
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        from smpfpt import _np as kernels
        BACKEND = "numpy"
else:
    from smpfpt import _np as kernels
    BACKEND = "numpy"

__all__ = ["BACKEND", "DISABLE_ENV", "kernels"]
