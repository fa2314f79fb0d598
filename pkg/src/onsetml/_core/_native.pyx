# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled SMO inner loop.

Operation-for-operation mirror of ``onsetml._core.pure.smo_solve`` (same
float op order, compiled with -ffp-contract=off), so results are
bit-identical to the numpy fallback. Keep the two in lockstep.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "native"

cdef double _MIN_STEP = 1e-10
cdef double _BOUND_RTOL = 1e-10


def smo_solve(K, y, c, double tol, long max_iter):
    """See ``onsetml._core.pure.smo_solve`` for the contract."""
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)

    cdef double[:, ::1] Kv = K
    cdef double[::1] yv = y
    cdef double[::1] cv = c
    cdef Py_ssize_t n = Kv.shape[0]

    alpha_arr = np.zeros(n, dtype=np.float64)
    errors_arr = -y.copy()
    c_lo_arr = c * _BOUND_RTOL
    c_hi_arr = c * (1.0 - _BOUND_RTOL)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] errors = errors_arr
    cdef double[::1] c_lo = c_lo_arr
    cdef double[::1] c_hi = c_hi_arr

    stuck_arr = np.zeros(n, dtype=np.uint8)
    tried_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] stuck = stuck_arr
    cdef unsigned char[::1] tried = tried_arr

    cdef double bias = 0.0
    cdef long iterations = 0
    cdef bint converged = 0
    cdef bint progressed
    cdef bint any_viol
    cdef bint may_recenter = 1
    cdef Py_ssize_t i, j, k, n_tried
    cdef double r, v, best, ei
    cdef double ai, aj, yi, yj, lo, hi, eta, aj_new, ai_new
    cdef double b1, b2, bias_new, di, dj, db

    while iterations < max_iter:
        # Worst non-stuck KKT violator (first index on ties).
        i = -1
        best = 0.0
        any_viol = 0
        for k in range(n):
            r = yv[k] * errors[k]
            if alpha[k] < c_hi[k] and r < -tol:
                v = (-r) - tol
            elif alpha[k] > c_lo[k] and r > tol:
                v = r - tol
            else:
                v = 0.0
            if v > 0.0:
                any_viol = 1
                if not stuck[k] and v > best:
                    best = v
                    i = k
        if i < 0:
            if not any_viol:
                converged = 1
                break
            if may_recenter:
                # All coefficients at bounds leave the bias under-determined;
                # re-center it on the midpoint of its KKT-feasible interval.
                bias_new = _centered_bias(alpha, yv, c_lo, c_hi, errors, bias, n)
                db = bias_new - bias
                for k in range(n):
                    errors[k] = errors[k] + db
                bias = bias_new
                for k in range(n):
                    stuck[k] = 0
                may_recenter = 0
                continue
            converged = 0
            break

        ei = errors[i]
        n_tried = 0
        for k in range(n):
            tried[k] = stuck[k]
            if tried[k]:
                n_tried += 1
        if not tried[i]:
            tried[i] = 1
            n_tried += 1

        progressed = 0
        while n_tried < n:
            # Second choice: largest |E_i - E_j| among untried (first on ties).
            j = -1
            best = -1.0
            for k in range(n):
                if tried[k]:
                    continue
                v = errors[k] - ei
                if v < 0.0:
                    v = -v
                if v > best:
                    best = v
                    j = k
            tried[j] = 1
            n_tried += 1

            ai = alpha[i]
            aj = alpha[j]
            yi = yv[i]
            yj = yv[j]
            if yi != yj:
                lo = aj - ai
                if lo < 0.0:
                    lo = 0.0
                hi = cv[i] + aj - ai
                if cv[j] < hi:
                    hi = cv[j]
            else:
                lo = ai + aj - cv[i]
                if lo < 0.0:
                    lo = 0.0
                hi = ai + aj
                if cv[j] < hi:
                    hi = cv[j]
            if lo >= hi:
                continue
            eta = Kv[i, i] + Kv[j, j] - 2.0 * Kv[i, j]
            if eta <= 0.0:
                continue
            aj_new = aj + yj * (errors[i] - errors[j]) / eta
            if aj_new < lo:
                aj_new = lo
            elif aj_new > hi:
                aj_new = hi
            v = aj_new - aj
            if v < 0.0:
                v = -v
            if v < _MIN_STEP:
                continue
            ai_new = ai + yi * yj * (aj - aj_new)
            # Keep exact box feasibility against rounding in the constraint step.
            if ai_new < 0.0:
                ai_new = 0.0
            elif ai_new > cv[i]:
                ai_new = cv[i]

            b1 = bias - errors[i] - yi * (ai_new - ai) * Kv[i, i] \
                - yj * (aj_new - aj) * Kv[i, j]
            b2 = bias - errors[j] - yi * (ai_new - ai) * Kv[i, j] \
                - yj * (aj_new - aj) * Kv[j, j]
            if c_lo[i] < ai_new < c_hi[i]:
                bias_new = b1
            elif c_lo[j] < aj_new < c_hi[j]:
                bias_new = b2
            else:
                bias_new = 0.5 * (b1 + b2)

            di = (ai_new - ai) * yi
            dj = (aj_new - aj) * yj
            db = bias_new - bias
            for k in range(n):
                t = ((di * Kv[i, k]) + (dj * Kv[j, k])) + db
                errors[k] = errors[k] + t
            alpha[i] = ai_new
            alpha[j] = aj_new
            bias = bias_new
            progressed = 1
            break

        if progressed:
            iterations += 1
            for k in range(n):
                stuck[k] = 0
            may_recenter = 1
        else:
            stuck[i] = 1

    # Canonical bias: midpoint of the KKT-feasible interval at the final
    # coefficients. Converged solutions stay within tolerance (the midpoint
    # never has a larger worst-side violation than the running bias).
    bias_new = _centered_bias(alpha, yv, c_lo, c_hi, errors, bias, n)
    db = bias_new - bias
    for k in range(n):
        errors[k] = errors[k] + db
    bias = bias_new
    if iterations >= max_iter:
        any_viol = 0
        for k in range(n):
            r = yv[k] * errors[k]
            if (alpha[k] < c_hi[k] and r < -tol) or (alpha[k] > c_lo[k] and r > tol):
                any_viol = 1
                break
        converged = not any_viol

    return alpha_arr, bias, errors_arr, iterations, bool(converged)


cdef double _centered_bias(double[::1] alpha, double[::1] yv,
                           double[::1] c_lo, double[::1] c_hi,
                           double[::1] errors, double bias, Py_ssize_t n):
    cdef double lower = -float("inf")
    cdef double upper = float("inf")
    cdef double t
    cdef bint interior, at_zero
    cdef Py_ssize_t k
    for k in range(n):
        t = bias - errors[k]
        interior = alpha[k] > c_lo[k] and alpha[k] < c_hi[k]
        at_zero = alpha[k] <= c_lo[k]
        if interior or (at_zero and yv[k] > 0.0) \
                or ((not interior and not at_zero) and yv[k] < 0.0):
            if t > lower:
                lower = t
        if interior or (at_zero and yv[k] < 0.0) \
                or ((not interior and not at_zero) and yv[k] > 0.0):
            if t < upper:
                upper = t
    if lower == -float("inf"):
        return upper
    if upper == float("inf"):
        return lower
    return 0.5 * (lower + upper)
