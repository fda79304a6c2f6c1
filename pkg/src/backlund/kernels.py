"""Backend selection for the hot loops.

The compiled extension ``_ckernels`` is used when it imports; otherwise, or
when the environment variable ``BACKLUND_PURE_PYTHON=1`` is set at import
time, the numpy fallback ``_pykernels`` is used. ``BACKEND`` names the
active one. Both modules are also importable directly (tests compare them).
"""

import os

from . import _pykernels

if os.environ.get("BACKLUND_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"
else:
    _impl = _pykernels
    BACKEND = "python"

sg_bt_sweep = _impl.sg_bt_sweep
sg_leapfrog = _impl.sg_leapfrog
toda_verlet = _impl.toda_verlet
toda_fwd_right = _impl.toda_fwd_right
toda_fwd_left = _impl.toda_fwd_left
toda_inv_right = _impl.toda_inv_right
toda_inv_left = _impl.toda_inv_left
linear_recurrence = _impl.linear_recurrence

__all__ = [
    "BACKEND",
    "sg_bt_sweep",
    "sg_leapfrog",
    "toda_verlet",
    "toda_fwd_right",
    "toda_fwd_left",
    "toda_inv_right",
    "toda_inv_left",
    "linear_recurrence",
]
