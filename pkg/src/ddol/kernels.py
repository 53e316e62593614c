"""Hot loops behind one import: the compiled extension when it was built,
otherwise the pure-Python twin. Both produce bit-identical output."""
from __future__ import annotations

try:
    from . import _ckernels as _impl
except ImportError:  # extension not built
    from . import _pykernels as _impl

BACKEND: str = _impl.BACKEND

MERGE_GEOMETRIC = _impl.MERGE_GEOMETRIC
MERGE_ARITHMETIC = _impl.MERGE_ARITHMETIC
VARIANT_OGD = _impl.VARIANT_OGD
VARIANT_EG = _impl.VARIANT_EG

stump_errors = _impl.stump_errors
choose_expert = _impl.choose_expert
dwm_run = _impl.dwm_run
omd_run = _impl.omd_run


def available_backends() -> dict:
    """Map backend name to kernel module for every backend importable here."""
    from . import _pykernels

    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["compiled"] = _ckernels
    return out
