"""Kernel backend selection.

The compiled extension is used when importable; set ``LOMA_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on build
    _compiled = None

BACKENDS = {"python": _pykernels}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

if os.environ.get("LOMA_PURE_PYTHON", "") not in ("", "0") or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

_impl = BACKENDS[BACKEND]
knn_select = _impl.knn_select
sphere_distance = _impl.sphere_distance
class_distance = _impl.class_distance
batch_class_distances = _impl.batch_class_distances


def get_backend(name):
    """Return the kernel module for ``name`` ("python" or "cython")."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {sorted(BACKENDS)}") from None
