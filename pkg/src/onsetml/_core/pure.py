"""Numpy reference implementation of the SMO dual solver.

Semantics here define the solver: the compiled backend in ``_native.pyx``
mirrors this loop operation-for-operation (same float op order, no FMA) so
both produce bit-identical results. Any change must be mirrored there.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"

# Minimum useful coefficient step; below this a pair is treated as stuck.
_MIN_STEP = 1e-10
# Relative slack for "at a box bound" tests: constraint arithmetic can land
# a coefficient a few ulps inside its bound, which must not read as interior.
_BOUND_RTOL = 1e-10


def smo_solve(K, y, c, tol, max_iter):
    """Solve the box-constrained SVM dual by sequential minimal optimization.

    Parameters
    ----------
    K : (n, n) float64 Gram matrix.
    y : (n,) float64 labels in {-1, +1}.
    c : (n,) float64 per-sample box upper bounds.
    tol : KKT violation threshold for convergence.
    max_iter : cap on successful pair updates.

    Returns
    -------
    (alpha, bias, errors, iterations, converged) where ``errors`` holds
    f(x_k) - y_k for every training row at the returned iterate.

    Pair choice: the worst KKT violator i (first index on ties) paired with
    the j maximizing |E_i - E_j|; failing pairs fall back to the next-best
    j, then to the next-worst violator. Pair steps cannot move the bias when
    every coefficient sits on a box bound, so a full stall triggers one bias
    re-centering onto the midpoint of its KKT-feasible interval before the
    solver gives up.
    """
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    n = K.shape[0]
    alpha = np.zeros(n)
    bias = 0.0
    errors = -y.copy()  # f = 0 at alpha = 0
    c_lo = c * _BOUND_RTOL  # below: effectively zero
    c_hi = c * (1.0 - _BOUND_RTOL)  # above: effectively at the cap
    iterations = 0
    converged = False
    # Violators that failed to make progress since the last successful step.
    stuck = np.zeros(n, dtype=bool)
    may_recenter = True

    while iterations < max_iter:
        r = y * errors
        viol = np.where((alpha < c_hi) & (r < -tol), -r - tol, 0.0)
        viol = np.where((alpha > c_lo) & (r > tol), r - tol, viol)
        candidate = np.where(stuck, -np.inf, viol)
        i = int(np.argmax(candidate))
        if not candidate[i] > 0.0:
            if not bool((viol > 0.0).any()):
                converged = True
                break
            if may_recenter:
                bias_new = _centered_bias(alpha, y, c_lo, c_hi, errors, bias)
                errors += bias_new - bias
                bias = bias_new
                stuck[:] = False
                may_recenter = False
                continue
            converged = False
            break

        absdiff = np.abs(errors - errors[i])
        tried = stuck.copy()
        tried[i] = True
        progressed = False
        while not tried.all():
            j = int(np.argmax(np.where(tried, -np.inf, absdiff)))
            tried[j] = True
            step = _pair_step(K, y, c, c_lo, c_hi, alpha, bias, errors, i, j)
            if step is not None:
                alpha[i], alpha[j], bias = step[0], step[1], step[2]
                errors += step[3]
                progressed = True
                break
        if progressed:
            iterations += 1
            stuck[:] = False
            may_recenter = True
        else:
            stuck[i] = True

    # Canonical bias: midpoint of the KKT-feasible interval at the final
    # coefficients. Converged solutions stay within tolerance (the midpoint
    # never has a larger worst-side violation than the running bias).
    bias_new = _centered_bias(alpha, y, c_lo, c_hi, errors, bias)
    errors += bias_new - bias
    bias = bias_new
    if iterations >= max_iter:
        r = y * errors
        viol = np.where((alpha < c_hi) & (r < -tol), -r - tol, 0.0)
        viol = np.where((alpha > c_lo) & (r > tol), r - tol, viol)
        converged = not bool((viol > 0.0).any())

    return alpha, bias, errors, iterations, converged


def _centered_bias(alpha, y, c_lo, c_hi, errors, bias):
    """Midpoint of the bias interval allowed by the KKT conditions at alpha.

    With g_k the bias-free decision value, each sample bounds the feasible
    bias via t_k = y_k - g_k = bias - E_k: interior coefficients pin it,
    bound coefficients cap it from one side depending on their label.
    """
    t = bias - errors
    lower = -np.inf
    upper = np.inf
    interior = (alpha > c_lo) & (alpha < c_hi)
    at_zero = alpha <= c_lo
    at_cap = ~interior & ~at_zero
    lower_set = interior | (at_zero & (y > 0.0)) | (at_cap & (y < 0.0))
    upper_set = interior | (at_zero & (y < 0.0)) | (at_cap & (y > 0.0))
    if lower_set.any():
        lower = float(np.max(t[lower_set]))
    if upper_set.any():
        upper = float(np.min(t[upper_set]))
    if lower == -np.inf:
        return upper
    if upper == np.inf:
        return lower
    return 0.5 * (lower + upper)


def _pair_step(K, y, c, c_lo, c_hi, alpha, bias, errors, i, j):
    """One Platt-style update of (alpha_i, alpha_j); None when no progress."""
    ai, aj = alpha[i], alpha[j]
    yi, yj = y[i], y[j]
    if yi != yj:
        lo = max(0.0, aj - ai)
        hi = min(c[j], c[i] + aj - ai)
    else:
        lo = max(0.0, ai + aj - c[i])
        hi = min(c[j], ai + aj)
    if lo >= hi:
        return None
    eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
    if eta <= 0.0:
        # Only possible for coincident rows (PSD kernel); nothing to gain.
        return None
    aj_new = aj + yj * (errors[i] - errors[j]) / eta
    if aj_new < lo:
        aj_new = lo
    elif aj_new > hi:
        aj_new = hi
    if abs(aj_new - aj) < _MIN_STEP:
        return None
    ai_new = ai + yi * yj * (aj - aj_new)
    # Keep exact box feasibility against rounding in the constraint step.
    if ai_new < 0.0:
        ai_new = 0.0
    elif ai_new > c[i]:
        ai_new = c[i]

    b1 = bias - errors[i] - yi * (ai_new - ai) * K[i, i] - yj * (aj_new - aj) * K[i, j]
    b2 = bias - errors[j] - yi * (ai_new - ai) * K[i, j] - yj * (aj_new - aj) * K[j, j]
    if c_lo[i] < ai_new < c_hi[i]:
        bias_new = b1
    elif c_lo[j] < aj_new < c_hi[j]:
        bias_new = b2
    else:
        bias_new = 0.5 * (b1 + b2)

    di = (ai_new - ai) * yi
    dj = (aj_new - aj) * yj
    db = bias_new - bias
    delta_errors = (di * K[i] + dj * K[j]) + db
    return ai_new, aj_new, bias_new, delta_errors
