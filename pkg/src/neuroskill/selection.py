"""Two-stage feature selection: a per-feature t-test filter, then greedy
forward selection by Fisher class separability."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05
RIDGE = 1e-8
PREMIER_SIZES = (5, 10, 15, 20, 25, 30)


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class SelectionResult:
    feature_ids: tuple[int, ...]
    p_values: np.ndarray
    filtered_ids: tuple[int, ...]
    forward_ranking: tuple[int, ...] = ()
    criterion_trace: tuple[float, ...] = ()
    degenerate_ids: tuple[int, ...] = ()
    alpha: float = DEFAULT_ALPHA

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "p_values": {str(f): float(p) for f, p in zip(self.feature_ids, self.p_values)},
            "filtered_ids": list(self.filtered_ids),
            "degenerate_ids": list(self.degenerate_ids),
            "forward_ranking": list(self.forward_ranking),
            "criterion_trace": list(self.criterion_trace),
        }


def _split_classes(values, y):
    values = np.asarray(values, dtype=float)
    y = np.asarray(y)
    if y.dtype == object or y.dtype.kind in "US":
        y = (y == "skilled").astype(int)
    a, b = values[y == 1], values[y == 0]
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise SelectionError(f"need >= 2 rows per class, got {a.shape[0]} skilled / {b.shape[0]} novice")
    return a, b, y


def ttest_pvalues(values, y, equal_var: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Two-sided two-sample t-test p-value per column.

    Welch's unequal-variance test by default.  Columns constant within both
    classes get p = 1 (equal means) or p = 0 (different means) and are
    reported in the returned degenerate mask.
    """
    a, b, _ = _split_classes(values, y)
    var_a = a.var(axis=0, ddof=1)
    var_b = b.var(axis=0, ddof=1)
    degenerate = (var_a == 0) & (var_b == 0)
    with np.errstate(divide="ignore", invalid="ignore"), warnings.catch_warnings():
        # near-constant columns trip scipy's cancellation check; handled below
        warnings.simplefilter("ignore", RuntimeWarning)
        p = stats.ttest_ind(a, b, axis=0, equal_var=equal_var).pvalue
    p = np.asarray(p, dtype=float)
    same = a.mean(axis=0) == b.mean(axis=0)
    p[degenerate & same] = 1.0
    p[degenerate & ~same] = 0.0
    p[np.isnan(p)] = 1.0
    return p, degenerate


def ttest_filter(values, y, feature_ids, alpha: float = DEFAULT_ALPHA, equal_var: bool = False) -> SelectionResult:
    if not 0.0 < alpha <= 1.0:
        raise SelectionError(f"alpha must lie in (0, 1], got {alpha}")
    p, degenerate = ttest_pvalues(values, y, equal_var=equal_var)
    ids = tuple(int(f) for f in feature_ids)
    keep = tuple(f for f, pj, dg in zip(ids, p, degenerate) if pj < alpha and not dg)
    return SelectionResult(
        feature_ids=ids,
        p_values=p,
        filtered_ids=keep,
        degenerate_ids=tuple(f for f, dg in zip(ids, degenerate) if dg),
        alpha=alpha,
    )


def scatter_matrices(values, y):
    """Within-class scatter S_W and the class-mean difference term of S_B.

    Returns ``(sw, diff, scale)`` with S_B = scale * outer(diff, diff).
    """
    a, b, _ = _split_classes(values, y)
    ma, mb = a.mean(axis=0), b.mean(axis=0)
    ca, cb = a - ma, b - mb
    sw = np.einsum("ni,nj->ij", ca, ca) + np.einsum("ni,nj->ij", cb, cb)
    na, nb = a.shape[0], b.shape[0]
    return sw, ma - mb, na * nb / (na + nb)


def fisher_criterion(values, y, ridge: float = RIDGE) -> float:
    """trace((S_W + ridge I)^-1 S_B) on all columns of ``values``."""
    sw, diff, scale = scatter_matrices(values, y)
    sw = sw + ridge * np.eye(sw.shape[0])
    return float(scale * diff @ linalg.solve(sw, diff, assume_a="pos"))


def forward_select(values, y, feature_ids, k: int, candidates=None, ridge: float = RIDGE) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Greedy forward selection of ``k`` features maximizing the Fisher criterion.

    Each step adds the candidate with the largest criterion gain; exact ties
    go to the lower feature id.  Gains come from the Schur complement of the
    current subset, so a whole step is one batch of small solves.

    Returns ``(ranking, criterion_trace)``.
    """
    ids = [int(f) for f in feature_ids]
    pos = {f: i for i, f in enumerate(ids)}
    cand = sorted(set(ids if candidates is None else (int(c) for c in candidates)))
    missing = [c for c in cand if c not in pos]
    if missing:
        raise SelectionError(f"candidates {missing} are not columns of the matrix")
    if k > len(cand):
        raise SelectionError(f"k={k} exceeds the {len(cand)} candidate features")
    sw, diff, scale = scatter_matrices(values, y)
    sw = sw + ridge * np.eye(sw.shape[0])

    chosen: list[int] = []
    remaining = [pos[c] for c in cand]
    trace = []
    total = 0.0
    for _ in range(k):
        rem = np.array(remaining)
        if chosen:
            s = np.array(chosen)
            fac = linalg.cho_factor(sw[np.ix_(s, s)])
            cross = sw[np.ix_(s, rem)]
            u = linalg.cho_solve(fac, cross)
            schur = sw[rem, rem] - np.einsum("ij,ij->j", cross, u)
            num = diff[rem] - u.T @ diff[s]
        else:
            schur = sw[rem, rem]
            num = diff[rem]
        gain = np.maximum(num * num / np.maximum(schur, np.finfo(float).tiny), 0.0)
        best = int(np.argmax(gain))  # remaining is sorted by id, so the first max is the lowest id
        total += float(gain[best])
        chosen.append(remaining.pop(best))
        trace.append(scale * total)
    return tuple(ids[c] for c in chosen), tuple(trace)


def select(values, y, feature_ids, k_max: int = 30, alpha: float = DEFAULT_ALPHA, equal_var: bool = False,
           quiet: bool = False) -> SelectionResult:
    """Filter, then rank up to ``k_max`` of the surviving features.

    A short ranking is logged as a warning, or at debug level when ``quiet``
    (the evaluation grid records it per cell instead).
    """
    res = ttest_filter(values, y, feature_ids, alpha=alpha, equal_var=equal_var)
    k = min(k_max, len(res.filtered_ids))
    if k < k_max:
        log.log(logging.DEBUG if quiet else logging.WARNING, "only %d features pass the t-test filter; ranking truncated from %d", k, k_max)
    ranking, trace = forward_select(values, y, feature_ids, k, candidates=res.filtered_ids) if k else ((), ())
    return SelectionResult(
        feature_ids=res.feature_ids,
        p_values=res.p_values,
        filtered_ids=res.filtered_ids,
        forward_ranking=ranking,
        criterion_trace=trace,
        degenerate_ids=res.degenerate_ids,
        alpha=alpha,
    )


def premier_subsets(values, y, feature_ids, sizes=PREMIER_SIZES, alpha: float = DEFAULT_ALPHA) -> dict[int, list[int]]:
    """Nested best-k feature lists for each k in ``sizes`` from one forward ranking.

    Sizes larger than the number of filtered features are dropped with a warning.
    """
    res = select(values, y, feature_ids, k_max=max(sizes), alpha=alpha)
    out = {}
    for s in sizes:
        if s <= len(res.forward_ranking):
            out[s] = list(res.forward_ranking[:s])
        else:
            log.warning("premier subset of size %d unavailable (%d ranked)", s, len(res.forward_ranking))
    return out
