# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the characteristic tracer.

Scalar Dormand-Prince 5(4) loop per node; mirrors ``_pure.py`` exactly
(tableau, controller constants, field arithmetic) so the two backends
agree to rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, isfinite, log, pow

cnp.import_array()

FIELD_TWO_TERM = 1
FIELD_TWO_LADDER = 2

cdef int _TWO_TERM = 1
cdef int _TWO_LADDER = 2

cdef double _C2 = 0.2
cdef double _C3 = 0.3
cdef double _C4 = 0.8
cdef double _C5 = 8.0 / 9.0
cdef double _A21 = 0.2
cdef double _A31 = 3.0 / 40.0
cdef double _A32 = 9.0 / 40.0
cdef double _A41 = 44.0 / 45.0
cdef double _A42 = -56.0 / 15.0
cdef double _A43 = 32.0 / 9.0
cdef double _A51 = 19372.0 / 6561.0
cdef double _A52 = -25360.0 / 2187.0
cdef double _A53 = 64448.0 / 6561.0
cdef double _A54 = -212.0 / 729.0
cdef double _A61 = 9017.0 / 3168.0
cdef double _A62 = -355.0 / 33.0
cdef double _A63 = 46732.0 / 5247.0
cdef double _A64 = 49.0 / 176.0
cdef double _A65 = -5103.0 / 18656.0
cdef double _B1 = 35.0 / 384.0
cdef double _B3 = 500.0 / 1113.0
cdef double _B4 = 125.0 / 192.0
cdef double _B5 = -2187.0 / 6784.0
cdef double _B6 = 11.0 / 84.0
cdef double _E1 = 71.0 / 57600.0
cdef double _E3 = -71.0 / 16695.0
cdef double _E4 = 71.0 / 1920.0
cdef double _E5 = -17253.0 / 339200.0
cdef double _E6 = 22.0 / 525.0
cdef double _E7 = -1.0 / 40.0
cdef double _MIN_FACTOR = 0.2
cdef double _MAX_FACTOR = 5.0
cdef double _SAFETY = 0.9


cdef inline double _u_eval(int kind, const double* p, double eps, double a) noexcept nogil:
    cdef double r, d, t, top_a, top_b, g, dphi
    if eps <= 0.0:
        return 0.0
    if kind == _TWO_TERM:
        if p[0] == 0.0:
            r = 0.0
        elif p[3] == 0.0:
            r = 1.0
        else:
            d = (log(p[3]) - log(p[0])) - (p[4] - p[1]) * log(a) + (p[5] - p[2]) * log(eps)
            t = exp(-fabs(d))
            if d > 0.0:
                r = t / (1.0 + t)
            else:
                r = 1.0 / (1.0 + t)
        return -(eps / a) * (p[1] * r / (p[2] + 1.0) + p[4] * (1.0 - r) / (p[5] + 1.0))
    else:
        top_a = p[2] * p[0] * a
        top_b = p[3] * p[1] / a
        g = 0.0
        dphi = 0.0
        if eps <= top_a:
            g += 1.0 / (p[0] * a)
            dphi += -eps / (p[0] * a * a)
        if eps <= top_b:
            g += a / p[1]
            dphi += eps / p[1]
        if g <= 0.0:
            return 0.0
        return dphi / g


def velocity(int kind, cnp.ndarray[cnp.float64_t, ndim=1] params,
             cnp.ndarray[cnp.float64_t, ndim=1] eps, double a):
    if kind != _TWO_TERM and kind != _TWO_LADDER:
        raise ValueError(f"unknown field kind {kind}")
    cdef Py_ssize_t n = eps.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef const double* p = <const double*> params.data
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _u_eval(kind, p, eps[i], a)
    return out


def trace_batch(int kind, cnp.ndarray[cnp.float64_t, ndim=1] params,
                cnp.ndarray[cnp.float64_t, ndim=1] y0,
                double a0, double a1, double rtol, double atol, long max_steps):
    if kind != _TWO_TERM and kind != _TWO_LADDER:
        raise ValueError(f"unknown field kind {kind}")
    cdef Py_ssize_t n = y0.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y1 = np.empty(n)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] status = np.zeros(n, dtype=np.int64)
    cdef const double* p = <const double*> params.data
    cdef Py_ssize_t i
    cdef long step
    cdef double y, ynew, a, h, ha, rem, err, err_norm, scale, factor
    cdef double k1, k2, k3, k4, k5, k6, k7
    cdef bint clip, done

    with nogil:
        for i in range(n):
            y = y0[i]
            a = a0
            h = (a1 - a0) * 0.01
            done = False
            for step in range(max_steps):
                rem = a1 - a
                ha = h
                clip = fabs(ha) >= fabs(rem)
                if clip:
                    ha = rem

                k1 = -_u_eval(kind, p, y, a)
                k2 = -_u_eval(kind, p, y + ha * (_A21 * k1), a + _C2 * ha)
                k3 = -_u_eval(kind, p, y + ha * (_A31 * k1 + _A32 * k2), a + _C3 * ha)
                k4 = -_u_eval(kind, p, y + ha * (_A41 * k1 + _A42 * k2 + _A43 * k3),
                              a + _C4 * ha)
                k5 = -_u_eval(kind, p,
                              y + ha * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4),
                              a + _C5 * ha)
                k6 = -_u_eval(kind, p,
                              y + ha * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4
                                        + _A65 * k5),
                              a + ha)
                ynew = y + ha * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
                k7 = -_u_eval(kind, p, ynew, a + ha)
                err = ha * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6
                            + _E7 * k7)

                if not (isfinite(ynew) and isfinite(err)):
                    status[i] = 2
                    done = True
                    break

                scale = atol + rtol * max(fabs(y), fabs(ynew))
                err_norm = fabs(err) / scale

                if err_norm == 0.0:
                    factor = _MAX_FACTOR
                else:
                    factor = _SAFETY * pow(err_norm, -0.2)
                    if factor < _MIN_FACTOR:
                        factor = _MIN_FACTOR
                    elif factor > _MAX_FACTOR:
                        factor = _MAX_FACTOR

                if err_norm <= 1.0:
                    y = ynew
                    if clip:
                        a = a1
                    else:
                        a = a + ha
                h = ha * factor
                if a == a1:
                    done = True
                    break
            if not done:
                status[i] = 1
            y1[i] = y
    return y1, status
