"""Kernel backend selection.

The hot loops (field evaluation, adaptive RK stepping, event location, polar
angle integration) exist twice: a Cython extension ``_core`` and a pure-Python
twin ``pykernel``.  The compiled one is preferred; set QCFLOW_PURE_PYTHON=1 to
force the fallback.  Both expose the same functions with identical semantics.
"""

import os

from . import pykernel

if os.environ.get("QCFLOW_PURE_PYTHON"):
    _impl = pykernel
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = pykernel

BACKEND = _impl.BACKEND_NAME

eval_field = _impl.eval_field
eval_many = _impl.eval_many
integrate_time = _impl.integrate_time
integrate_polar = _impl.integrate_polar

STATUS_COMPLETED = pykernel.STATUS_COMPLETED
STATUS_EVENT = pykernel.STATUS_EVENT
STATUS_UNDERFLOW = pykernel.STATUS_UNDERFLOW
STATUS_MAXSTEPS = pykernel.STATUS_MAXSTEPS
STATUS_ZERO_RADIAL = pykernel.STATUS_ZERO_RADIAL

OP_DEGENERATE = pykernel.OP_DEGENERATE
OP_LINEAR = pykernel.OP_LINEAR
OP_RADIAL = pykernel.OP_RADIAL
OP_EXAMPLE2 = pykernel.OP_EXAMPLE2
OP_RESCALED = pykernel.OP_RESCALED
OP_CONVEX = pykernel.OP_CONVEX
