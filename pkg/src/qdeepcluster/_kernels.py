"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports cleanly; otherwise
(or when ``QDC_PURE=1``) the numpy fallback is used. ``BACKEND`` names the
active choice.
"""

import os

from . import _fallback

if os.environ.get("QDC_PURE", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
        BACKEND = "python"

anneal_probabilities = _impl.anneal_probabilities
conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward

__all__ = [
    "BACKEND",
    "anneal_probabilities",
    "conv2d_forward",
    "conv2d_backward",
]
