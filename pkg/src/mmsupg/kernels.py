"""Kernel backend selection.

The compiled extension ``mmsupg._kernels`` is used when it was built and
imports cleanly; otherwise the NumPy versions in ``_kernels_py`` are used.
Setting ``MMSUPG_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("MMSUPG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

mesh_energy = _impl.mesh_energy
locate = _impl.locate
barycentric = _kernels_py.barycentric
