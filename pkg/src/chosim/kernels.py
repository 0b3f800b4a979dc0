"""Backend selection for the hot channel kernel.

The compiled extension is used when it imports; setting the environment
variable ``CHOSIM_PURE_PYTHON=1`` forces the NumPy fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
channel_step = _kernels_py.channel_step

if not os.environ.get("CHOSIM_PURE_PYTHON"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "compiled"
        channel_step = _kernels.channel_step

__all__ = ["BACKEND", "channel_step"]
