"""Hot numeric kernels with selectable backend.

The characteristic tracer (an embedded Dormand-Prince 5(4) pair applied
independently to every energy node) dominates the runtime of continuum
experiments, so it lives behind a compiled Cython extension with a
numpy fallback implementing the identical algorithm.  The backend is
chosen once at import time; set ``ADIABAT_KERNELS=python`` or
``=compiled`` to force one.
"""

from __future__ import annotations

import os

import numpy as np

# Velocity-field kinds understood by both backends.  Parameter layout:
#   FIELD_TWO_TERM:   [C1, kappa1, eta1, C2, kappa2, eta2]
#   FIELD_TWO_LADDER: [delta_a, delta_b, m_a, m_b]
FIELD_TWO_TERM = 1
FIELD_TWO_LADDER = 2

_STATUS_MESSAGES = {
    1: "step budget exhausted before reaching the target parameter",
    2: "non-finite state encountered during characteristic tracing",
    3: "characteristic entered a region with vanishing density of states",
}


class KernelError(RuntimeError):
    """Raised when the low-level tracer cannot complete a node."""


def _load_backend():
    choice = os.environ.get("ADIABAT_KERNELS", "auto").strip().lower()
    if choice not in ("auto", "compiled", "python"):
        raise ValueError(f"ADIABAT_KERNELS must be 'compiled' or 'python', got {choice!r}")
    if choice in ("auto", "compiled"):
        try:
            from . import _core

            return _core, "compiled"
        except ImportError:
            if choice == "compiled":
                raise
    from . import _pure

    return _pure, "python"


_backend, BACKEND = _load_backend()


def get_backend(name: str):
    """Return a specific backend module ('compiled' or 'python')."""
    if name == "python":
        from . import _pure

        return _pure
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")


def velocity(kind: int, params, eps, a: float):
    """Wave velocity u(eps, a) for a parametric density-of-states family."""
    eps_arr = np.ascontiguousarray(np.atleast_1d(np.asarray(eps, dtype=float)))
    out = _backend.velocity(kind, np.asarray(params, dtype=float), eps_arr, float(a))
    return out if np.ndim(eps) else float(out[0])


def trace_batch(
    kind: int,
    params,
    eps0,
    a0: float,
    a1: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_steps: int = 100_000,
    backend=None,
) -> np.ndarray:
    """Integrate d(eps)/da = -u(eps, a) from a0 to a1 for a batch of nodes."""
    impl = backend if backend is not None else _backend
    y0 = np.ascontiguousarray(np.atleast_1d(np.asarray(eps0, dtype=float)))
    if a1 == a0:
        return y0.copy()
    y1, status = impl.trace_batch(
        kind, np.asarray(params, dtype=float), y0, float(a0), float(a1),
        float(rtol), float(atol), int(max_steps),
    )
    bad = np.nonzero(status)[0]
    if bad.size:
        code = int(status[bad[0]])
        msg = _STATUS_MESSAGES.get(code, f"status {code}")
        raise KernelError(
            f"characteristic tracing failed for {bad.size} node(s), "
            f"first at eps0={y0[bad[0]]!r}: {msg}"
        )
    return y1


def trace_path(
    kind: int,
    params,
    eps0,
    a_values,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_steps: int = 100_000,
) -> np.ndarray:
    """Trace nodes through a sequence of parameter values.

    Returns an array of shape (len(a_values), n_nodes); row 0 is eps0.
    """
    a_vals = np.asarray(a_values, dtype=float)
    y = np.atleast_1d(np.asarray(eps0, dtype=float)).copy()
    out = np.empty((a_vals.size, y.size))
    out[0] = y
    for i in range(1, a_vals.size):
        y = trace_batch(kind, params, y, a_vals[i - 1], a_vals[i], rtol, atol, max_steps)
        out[i] = y
    return out
