"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the NumPy
fallback is used. Setting ``SLCE_PURE_PYTHON=1`` forces the fallback.
"""

import os

from slce import _pykernels

BACKEND = "python"
adam_update = _pykernels.adam_update
gate_contraction = _pykernels.gate_contraction
max_ratio_cut = _pykernels.max_ratio_cut

if os.environ.get("SLCE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from slce import _ckernels
    except ImportError:  # extension not built
        _ckernels = None
    else:
        BACKEND = "cython"
        adam_update = _ckernels.adam_update
        gate_contraction = _ckernels.gate_contraction
        max_ratio_cut = _ckernels.max_ratio_cut


def backends():
    """Map of every importable backend name to its kernel namespace."""
    found = {"python": _pykernels}
    try:
        from slce import _ckernels as ck
    except ImportError:
        pass
    else:
        found["cython"] = ck
    return found
