"""Numpy fallback backend for the characteristic tracer.

Implements the same Dormand-Prince 5(4) scheme as the compiled core,
vectorized across nodes with an active-set mask so every node keeps its
own adaptive step size.  Kept in lockstep with ``_core.pyx``: same
tableau, same controller constants, same field arithmetic.
"""

from __future__ import annotations

import numpy as np

FIELD_TWO_TERM = 1
FIELD_TWO_LADDER = 2

# Dormand-Prince 5(4) tableau.
_C2, _C3, _C4, _C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# b - bhat, the embedded error weights (k7 term included).
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


def _u_two_term(params, eps, a):
    """u = -(eps/a) * (k1*r/(e1+1) + k2*(1-r)/(e2+1)) with r the stable
    logistic weight of the first power-law component."""
    c1, k1, e1, c2, k2, e2 = params
    u = np.zeros_like(eps)
    pos = eps > 0.0
    if not pos.any():
        return u
    ee = eps[pos]
    aa = a[pos]
    if c1 == 0.0:
        r = np.zeros_like(ee)
    elif c2 == 0.0:
        r = np.ones_like(ee)
    else:
        d = (np.log(c2) - np.log(c1)) - (k2 - k1) * np.log(aa) + (e2 - e1) * np.log(ee)
        t = np.exp(-np.abs(d))
        r = np.where(d > 0.0, t / (1.0 + t), 1.0 / (1.0 + t))
    u[pos] = -(ee / aa) * (k1 * r / (e1 + 1.0) + k2 * (1.0 - r) / (e2 + 1.0))
    return u


def _u_two_ladder(params, eps, a):
    """Coarse two-ladder velocity; u = 0 where the point carries no states
    (beyond both ladder tops), which no consistent trajectory reaches."""
    da, db, ma, mb = params
    top_a = ma * da * a
    top_b = mb * db / a
    in_a = eps <= top_a
    in_b = eps <= top_b
    g = in_a / (da * a) + in_b * a / db
    dphi = in_a * (-eps / (da * a * a)) + in_b * (eps / db)
    u = np.zeros_like(eps)
    ok = (g > 0.0) & (eps > 0.0)
    u[ok] = dphi[ok] / g[ok]
    return u


def _u(kind, params, eps, a):
    if kind == FIELD_TWO_TERM:
        return _u_two_term(params, eps, a)
    if kind == FIELD_TWO_LADDER:
        return _u_two_ladder(params, eps, a)
    raise ValueError(f"unknown field kind {kind}")


def velocity(kind, params, eps, a):
    return _u(kind, params, eps, np.full_like(eps, a))


def trace_batch(kind, params, y0, a0, a1, rtol, atol, max_steps):
    n = y0.size
    y = y0.astype(float).copy()
    a = np.full(n, a0)
    h = np.full(n, (a1 - a0) * 0.01)
    status = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)

    for _ in range(max_steps):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        ya = y[idx]
        aa = a[idx]
        rem = a1 - aa
        ha = h[idx]
        clip = np.abs(ha) >= np.abs(rem)
        ha = np.where(clip, rem, ha)

        k1 = -_u(kind, params, ya, aa)
        k2 = -_u(kind, params, ya + ha * (_A21 * k1), aa + _C2 * ha)
        k3 = -_u(kind, params, ya + ha * (_A31 * k1 + _A32 * k2), aa + _C3 * ha)
        k4 = -_u(kind, params, ya + ha * (_A41 * k1 + _A42 * k2 + _A43 * k3), aa + _C4 * ha)
        k5 = -_u(
            kind, params,
            ya + ha * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4),
            aa + _C5 * ha,
        )
        k6 = -_u(
            kind, params,
            ya + ha * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
            aa + ha,
        )
        ynew = ya + ha * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = -_u(kind, params, ynew, aa + ha)
        err = ha * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)

        scale = atol + rtol * np.maximum(np.abs(ya), np.abs(ynew))
        err_norm = np.abs(err) / scale
        nonfinite = ~np.isfinite(ynew) | ~np.isfinite(err)
        err_norm = np.where(nonfinite, np.inf, err_norm)

        factor = np.where(
            err_norm == 0.0,
            _MAX_FACTOR,
            _SAFETY * np.clip(err_norm, 1e-300, None) ** -0.2,
        )
        factor = np.clip(factor, _MIN_FACTOR, _MAX_FACTOR)
        accept = err_norm <= 1.0

        acc_idx = idx[accept]
        y[acc_idx] = ynew[accept]
        a[acc_idx] = np.where(clip[accept], a1, aa[accept] + ha[accept])
        h[idx] = ha * factor

        nf_idx = idx[nonfinite]
        status[nf_idx] = 2
        active[nf_idx] = False
        active[idx[a[idx] == a1]] = False
    else:
        status[active] = 1

    return y, status
