"""Pure-Python/numpy implementations of the hot kernels.

Each function here has a twin in ``_ckernels.pyx`` with the same signature
and, for identical inputs, the same result.
"""

import numpy as np


def extrema_counts(s):
    """Strict local maxima and minima of ``s``; plateaus collapse to one sample."""
    s = np.asarray(s, dtype=float)
    d = np.diff(s)
    d = d[d != 0]
    if d.shape[0] < 2:
        return 0, 0
    up = d > 0
    n_max = int(np.count_nonzero(up[:-1] & ~up[1:]))
    n_min = int(np.count_nonzero(~up[:-1] & up[1:]))
    return n_max, n_min


def zero_crossings(s):
    """Sign changes of ``s``; zero samples keep the preceding sign."""
    s = np.asarray(s, dtype=float)
    sg = np.sign(s)
    sg = sg[sg != 0]
    if sg.shape[0] < 2:
        return 0
    return int(np.count_nonzero(sg[1:] != sg[:-1]))


def smo_solve(K, y, C, tol, max_iter):
    """Soft-margin SVM dual by SMO with maximal-violating-pair selection.

    Parameters
    ----------
    K : (n, n) float array
        Kernel (Gram) matrix.
    y : (n,) float array of +1/-1
    C : float
        Box constraint.
    tol : float
        Stop when the KKT violation gap m - M drops below ``tol``.
    max_iter : int

    Returns
    -------
    alpha : (n,) array
    rho : float
        Decision values are ``sum(alpha * y * K(x_i, q)) - rho``.
    n_iter : int
    gap : float
        Final KKT gap; ``gap >= tol`` means the iteration cap was hit.
    """
    K = np.ascontiguousarray(K, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    pos = y > 0
    it = 0
    gap = np.inf
    while True:
        at_upper = alpha >= C
        at_lower = alpha <= 0
        up = (pos & ~at_upper) | (~pos & ~at_lower)
        low = (pos & ~at_lower) | (~pos & ~at_upper)
        score = -y * grad
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        if not up[i] or not low[j]:
            gap = 0.0
            break
        gap = score[i] - score[j]
        if gap < tol or it >= max_iter:
            break
        a = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if a <= 0.0:
            a = 1e-12
        bound_i = C - alpha[i] if y[i] > 0 else alpha[i]
        bound_j = alpha[j] if y[j] > 0 else C - alpha[j]
        lam = min(gap / a, bound_i, bound_j)
        hit_i = lam >= bound_i
        hit_j = lam >= bound_j
        grad += y * lam * (K[:, i] - K[:, j])
        if hit_i:
            alpha[i] = C if y[i] > 0 else 0.0
        else:
            alpha[i] += y[i] * lam
        if hit_j:
            alpha[j] = 0.0 if y[j] > 0 else C
        else:
            alpha[j] -= y[j] * lam
        it += 1
    return alpha, _rho(alpha, y, grad, C), it, float(gap)


def _rho(alpha, y, grad, C):
    yg = y * grad
    free_sum = 0.0
    n_free = 0
    ub = np.inf
    lb = -np.inf
    for t in range(alpha.shape[0]):
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg[t])
            else:
                lb = max(lb, yg[t])
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg[t])
            else:
                lb = max(lb, yg[t])
        else:
            n_free += 1
            free_sum += yg[t]
    if n_free:
        return free_sum / n_free
    return (ub + lb) / 2.0
