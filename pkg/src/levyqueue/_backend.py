"""Pick the compiled kernel when importable, else the pure-Python mirror.

Set ``LEVYQUEUE_PURE=1`` to force the fallback.
"""

import os

if os.environ.get("LEVYQUEUE_PURE"):
    from . import _kernel_py as kernel

    COMPILED = False
else:
    try:
        from . import _kernel as kernel

        COMPILED = True
    except ImportError:
        from . import _kernel_py as kernel

        COMPILED = False

from . import _kernel_py as pure_kernel  # noqa: E402

__all__ = ["kernel", "pure_kernel", "COMPILED"]
