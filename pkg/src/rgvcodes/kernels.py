"""Kernel selection: compiled extension when available, pure Python otherwise.

Set ``RGV_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("RGV_PURE_PYTHON"):
    from . import _kernels_py as impl

    COMPILED = False
else:
    try:
        from . import _kernels as impl

        COMPILED = True
    except ImportError:
        from . import _kernels_py as impl

        COMPILED = False

generate_rejection = impl.generate_rejection
mc_trials = impl.mc_trials
BACKEND = "cython" if COMPILED else "python"
