"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback in ``_kernels_py``. Set ``VRLATENCY_PURE_PYTHON=1`` to force
the fallback.
"""

import os

if os.environ.get("VRLATENCY_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
stream_ids = _impl.stream_ids
uniforms = _impl.uniforms
geometric_variates = _impl.geometric_variates
gamma_variates = _impl.gamma_variates
draw_attempts = _impl.draw_attempts
draw_backhaul = _impl.draw_backhaul
upload_maxima = _impl.upload_maxima


def load_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"`` explicitly."""
    if name == "python":
        from . import _kernels_py
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
