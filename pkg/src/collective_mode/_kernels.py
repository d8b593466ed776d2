"""Kernel backend selection.

Prefers the compiled extension; falls back to the pure-numpy
implementation when the extension was not built.  Set
COLLECTIVE_MODE_BACKEND=python to force the fallback.
"""

import os

if os.environ.get("COLLECTIVE_MODE_BACKEND", "").lower() == "python":
    from ._kernels_py import BACKEND_NAME, volterra_path
else:
    try:
        from ._kernels_cy import BACKEND_NAME, volterra_path
    except ImportError:
        from ._kernels_py import BACKEND_NAME, volterra_path

__all__ = ["volterra_path", "BACKEND_NAME"]
