"""Sweep kernels for the fixed-point solver.

The compiled extension is preferred when it was built; otherwise the pure
Python implementation is used, with identical semantics.  Setting the
environment variable ``PATHPROB_PURE_PYTHON`` (to anything non-empty)
forces the fallback, which the benchmark uses to compare both.
"""

import os

from ._sweep_py import gauss_seidel_sweep as _py_sweep
from ._sweep_py import max_residual as _py_residual

BACKEND = "python"
gauss_seidel_sweep = _py_sweep
max_residual = _py_residual

if not os.environ.get("PATHPROB_PURE_PYTHON"):
    try:
        from ._sweep_cy import gauss_seidel_sweep, max_residual  # noqa: F811

        BACKEND = "compiled"
    except ImportError:
        pass


def available_backends():
    """Name -> (sweep, residual) for every importable kernel backend."""
    backends = {"python": (_py_sweep, _py_residual)}
    try:
        from . import _sweep_cy

        backends["compiled"] = (_sweep_cy.gauss_seidel_sweep, _sweep_cy.max_residual)
    except ImportError:
        pass
    return backends
