"""Select the compiled kernels when available.

Set ``BMR_PURE=1`` to force the pure-Python implementation.
"""

import os

IMPLEMENTATION = "python"

if os.environ.get("BMR_PURE", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import Memory, add_with_carry, shift_c  # type: ignore
        IMPLEMENTATION = "cython"
    except ImportError:
        pass

if IMPLEMENTATION == "python":
    from ._kernels_py import Memory, add_with_carry, shift_c  # noqa: F811

__all__ = ["IMPLEMENTATION", "Memory", "add_with_carry", "shift_c"]
