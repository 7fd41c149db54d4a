"""Kernel backend selection.

Imports the compiled extension when available, otherwise the pure-Python
fallback.  TPO_PURE_PYTHON=1 forces the fallback.  The two backends are
kept bit-identical (see tests/test_kernels.py), so a trial logged under
one backend replays cleanly under the other.
"""

import os

if os.environ.get("TPO_PURE_PYTHON") == "1":
    from tpo import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from tpo import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        from tpo import _kernels_py as _impl

        BACKEND = "python"

fk_point = _impl.fk_point
fk_jacobian = _impl.fk_jacobian
jt_force = _impl.jt_force
admittance_advance = _impl.admittance_advance
