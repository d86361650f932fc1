# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def extrema_counts(s):
    cdef const double[::1] v = np.ascontiguousarray(s, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], k
    cdef int prev = 0, cur
    cdef long n_max = 0, n_min = 0
    cdef double d
    # branch-free: noisy signals make sign tests unpredictable
    for k in range(n - 1):
        d = v[k + 1] - v[k]
        cur = (d > 0) - (d < 0)
        n_max += (prev == 1) & (cur == -1)
        n_min += (prev == -1) & (cur == 1)
        prev += (cur != 0) * (cur - prev)
    return int(n_max), int(n_min)


def zero_crossings(s):
    cdef const double[::1] v = np.ascontiguousarray(s, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], k
    cdef int prev = 0, cur
    cdef long count = 0
    for k in range(n):
        cur = (v[k] > 0) - (v[k] < 0)
        count += (prev != 0) & (cur != 0) & (cur != prev)
        prev += (cur != 0) * (cur - prev)
    return int(count)


def smo_solve(K, y, double C, double tol, long max_iter):
    cdef const double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], t, i, j
    alpha_arr = np.zeros(n)
    grad_arr = -np.ones(n)
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] grad = grad_arr
    cdef double best_up, best_low, sc, gap = np.inf, a, lam, bound_i, bound_j, ylam
    cdef bint in_up, in_low, hit_i, hit_j
    cdef long it = 0
    while True:
        i = -1
        j = -1
        best_up = -np.inf
        best_low = np.inf
        for t in range(n):
            sc = -yv[t] * grad[t]
            if yv[t] > 0:
                in_up = alpha[t] < C
                in_low = alpha[t] > 0
            else:
                in_up = alpha[t] > 0
                in_low = alpha[t] < C
            if in_up and (i < 0 or sc > best_up):
                best_up = sc
                i = t
            if in_low and (j < 0 or sc < best_low):
                best_low = sc
                j = t
        if i < 0 or j < 0:
            gap = 0.0
            break
        gap = best_up - best_low
        if gap < tol or it >= max_iter:
            break
        a = Kv[i, i] + Kv[j, j] - 2.0 * Kv[i, j]
        if a <= 0.0:
            a = 1e-12
        bound_i = C - alpha[i] if yv[i] > 0 else alpha[i]
        bound_j = alpha[j] if yv[j] > 0 else C - alpha[j]
        lam = gap / a
        if bound_i < lam:
            lam = bound_i
        if bound_j < lam:
            lam = bound_j
        hit_i = lam >= bound_i
        hit_j = lam >= bound_j
        for t in range(n):
            ylam = yv[t] * lam
            grad[t] = grad[t] + ylam * (Kv[t, i] - Kv[t, j])
        if hit_i:
            alpha[i] = C if yv[i] > 0 else 0.0
        else:
            alpha[i] = alpha[i] + yv[i] * lam
        if hit_j:
            alpha[j] = 0.0 if yv[j] > 0 else C
        else:
            alpha[j] = alpha[j] - yv[j] * lam
        it += 1
    return alpha_arr, _rho(alpha, yv, grad, C), int(it), float(gap)


cdef double _rho(double[::1] alpha, const double[::1] y, double[::1] grad, double C):
    cdef Py_ssize_t t, n = alpha.shape[0]
    cdef double yg, free_sum = 0.0, ub = np.inf, lb = -np.inf
    cdef long n_free = 0
    for t in range(n):
        yg = y[t] * grad[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            n_free += 1
            free_sum += yg
    if n_free:
        return free_sum / n_free
    return (ub + lb) / 2.0
