"""Binary skilled/novice classifiers with a continuous skilled score.

All four share the same interface: ``fit(X, y)`` with ``y`` 1 for skilled
and 0 for novice, then ``score(Q)`` returning one value per query row that
grows with skilled-ness.  KNN and fuzzy KNN scores lie in [0, 1], Parzen
scores are posterior probabilities under equal priors, and the SVM score is
the signed decision value.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, logsumexp

from neuroskill import _kernels

KINDS = ("knn", "parzen", "svm", "fknn")


class ClassifierError(ValueError):
    pass


class ConvergenceError(ClassifierError):
    pass


def _check_xy(X, y):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y).astype(int).ravel()
    if X.shape[0] != y.shape[0]:
        raise ClassifierError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    if not np.all(np.isin(y, (0, 1))):
        raise ClassifierError("labels must be 0 (novice) or 1 (skilled)")
    return X, y


def sq_distances(Q, X):
    """Squared Euclidean distances, shape (n_queries, n_train)."""
    d = Q[:, None, :] - X[None, :, :]
    return np.einsum("qnd,qnd->qn", d, d)


def _neighbors(Q, X, k):
    d2 = sq_distances(Q, X)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return order, np.sqrt(np.take_along_axis(d2, order, axis=1))


class KNN:
    kind = "knn"

    def __init__(self, k: int = 7):
        self.k = k

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        if self.k > X.shape[0]:
            raise ClassifierError(f"k={self.k} exceeds {X.shape[0]} training rows")
        self.X_, self.y_ = X, y
        return self

    def score(self, Q):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        order, _ = _neighbors(Q, self.X_, self.k)
        return self.y_[order].sum(axis=1) / self.k

    def summary(self):
        return {"kind": self.kind, "k": self.k, "stored_rows": int(self.X_.shape[0])}


class FuzzyKNN:
    """Keller's fuzzy k-nearest-neighbour rule with crisp training memberships."""

    kind = "fknn"

    def __init__(self, k: int = 7, m: float = 2.0):
        if m <= 1:
            raise ClassifierError(f"fuzzifier m must be > 1, got {m}")
        self.k = k
        self.m = m

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        if self.k > X.shape[0]:
            raise ClassifierError(f"k={self.k} exceeds {X.shape[0]} training rows")
        self.X_, self.y_ = X, y
        return self

    def memberships(self, Q):
        """(n_queries, 2) memberships, columns (novice, skilled)."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        order, dist = _neighbors(Q, self.X_, self.k)
        u = np.stack([1 - self.y_[order], self.y_[order]], axis=-1).astype(float)
        zero = dist == 0
        with np.errstate(divide="ignore"):
            w = dist ** (-2.0 / (self.m - 1.0))
        # exact matches take over: average the memberships of zero-distance neighbours
        hit = zero.any(axis=1)
        w[hit] = zero[hit].astype(float)
        return np.einsum("qk,qkc->qc", w, u) / w.sum(axis=1)[:, None]

    def score(self, Q):
        return self.memberships(Q)[:, 1]

    def summary(self):
        return {"kind": self.kind, "k": self.k, "m": self.m, "stored_rows": int(self.X_.shape[0])}


def silverman_bandwidth(X) -> float:
    """Silverman's rule of thumb for an isotropic Gaussian kernel on pooled data."""
    n, d = X.shape
    sigma = float(np.mean(np.std(X, axis=0, ddof=1)))
    return sigma * (4.0 / ((d + 2.0) * n)) ** (1.0 / (d + 4.0))


class Parzen:
    """Per-class Gaussian kernel density estimates with a shared bandwidth."""

    kind = "parzen"

    def __init__(self, bandwidth="auto"):
        if bandwidth != "auto" and not float(bandwidth) > 0:
            raise ClassifierError(f"bandwidth must be positive, got {bandwidth}")
        self.bandwidth = bandwidth

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        for c in (0, 1):
            if np.count_nonzero(y == c) < 2:
                raise ClassifierError("Parzen window needs at least 2 training rows per class")
        if self.bandwidth == "auto":
            h = silverman_bandwidth(X) if X.shape[0] > 1 else 0.0
            self.auto_fallback_ = not h > 0
            self.h_ = h if h > 0 else 1.0
        else:
            self.h_ = float(self.bandwidth)
            self.auto_fallback_ = False
        self.X_, self.y_ = X, y
        return self

    def log_density(self, Q, c):
        """Log of the class-``c`` kernel density estimate at each query row."""
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        Xc = self.X_[self.y_ == c]
        d = Xc.shape[1]
        h2 = self.h_ * self.h_
        log_norm = -0.5 * d * np.log(2 * np.pi * h2) - np.log(Xc.shape[0])
        return logsumexp(-0.5 * sq_distances(Q, Xc) / h2, axis=1) + log_norm

    def score(self, Q):
        ls = self.log_density(Q, 1)
        ln = self.log_density(Q, 0)
        both_dead = np.isneginf(ls) & np.isneginf(ln)
        with np.errstate(invalid="ignore"):
            out = expit(ls - ln)
        out[both_dead] = 0.5
        return out

    def summary(self):
        return {"kind": self.kind, "bandwidth": self.h_, "stored_rows": int(self.X_.shape[0])}


class SVM:
    """Soft-margin SVM trained by SMO on the dual."""

    kind = "svm"

    def __init__(self, C: float = 1.0, kernel: str = "rbf", gamma="auto", tol: float = 1e-3, max_iter: int = 100_000):
        if kernel not in ("rbf", "linear"):
            raise ClassifierError(f"unknown kernel {kernel!r}")
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter

    def _gram(self, A, B):
        if self.kernel == "linear":
            return np.einsum("id,jd->ij", A, B)
        return np.exp(-self.gamma_ * sq_distances(A, B))

    def fit(self, X, y):
        X, y = _check_xy(X, y)
        if len(np.unique(y)) < 2:
            raise ClassifierError("SVM needs both classes in training")
        if self.gamma == "auto":
            var = float(X.var())
            self.gamma_ = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        else:
            self.gamma_ = float(self.gamma)
        K = self._gram(X, X)
        K = 0.5 * (K + K.T)
        ys = np.where(y == 1, 1.0, -1.0)
        alpha, rho, n_iter, gap = _kernels.smo_solve(K, ys, float(self.C), float(self.tol), int(self.max_iter))
        if gap >= self.tol:
            raise ConvergenceError(
                f"SMO stopped after {n_iter} iterations with KKT gap {gap:.3g} (tol {self.tol}, C {self.C})"
            )
        sv = alpha > 0
        self.n_iter_ = n_iter
        self.support_ = np.flatnonzero(sv)
        self.sv_ = X[sv]
        self.coef_ = alpha[sv] * ys[sv]
        self.rho_ = rho
        return self

    def score(self, Q):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        return self._gram(Q, self.sv_) @ self.coef_ - self.rho_

    def summary(self):
        return {
            "kind": self.kind,
            "kernel": self.kernel,
            "C": self.C,
            "gamma": self.gamma_,
            "support_vectors": int(self.support_.shape[0]),
            "iterations": int(self.n_iter_),
        }


def make_classifier(kind: str, **params):
    """Construct an unfitted classifier by kind name."""
    table = {"knn": KNN, "parzen": Parzen, "svm": SVM, "fknn": FuzzyKNN}
    try:
        cls = table[kind]
    except KeyError:
        raise ClassifierError(f"unknown classifier {kind!r}; choose from {KINDS}") from None
    return cls(**params)
