"""Repeated stratified train/test experiments scored by equal error rate."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from neuroskill.classifiers import KINDS, make_classifier
from neuroskill.features import FeatureMatrix, apply_normalization, fit_normalization
from neuroskill.selection import DEFAULT_ALPHA, select

log = logging.getLogger(__name__)

DEFAULT_FRACTIONS = tuple(round(0.1 * k, 10) for k in range(1, 10))
DEFAULT_FEATURE_COUNTS = (5, 10, 15, 20, 25, 30)
REPORT_COLUMNS = (
    "scenario",
    "classifier",
    "train_frac",
    "n_features",
    "iteration",
    "eer",
    "sensitivity",
    "specificity",
    "threshold",
)


class EvaluationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Equal error rate


@dataclass(frozen=True)
class EERResult:
    eer: float
    threshold: float
    sensitivity: float
    specificity: float
    tolerance: float
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray


def compute_eer(scores, y) -> EERResult:
    """Equal error rate of ``scores`` (higher = skilled) against labels ``y``.

    Every distinct score is tried as a threshold (skilled iff score >= t),
    plus +inf.  The EER is read where sensitivity and specificity cross,
    interpolating linearly between the two bracketing thresholds.  The
    reported threshold/sensitivity/specificity belong to whichever bracketing
    threshold is closer to the crossing; ``tolerance`` is its |sens - spec|.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(y).astype(int)
    pos = np.sort(s[y == 1])
    neg = np.sort(s[y == 0])
    if pos.size == 0 or neg.size == 0:
        raise EvaluationError("EER needs both classes among the labels")
    if not np.all(np.isfinite(s)):
        raise EvaluationError("scores contain non-finite values")
    th = np.append(np.unique(s), np.inf)
    sens = (pos.size - np.searchsorted(pos, th, side="left")) / pos.size
    spec = np.searchsorted(neg, th, side="left") / neg.size
    d = sens - spec
    k = int(np.argmax(d <= 0))
    if d[k] == 0:
        eer = 1.0 - sens[k]
        pick = k
    else:
        t = d[k - 1] / (d[k - 1] - d[k])
        eer = 1.0 - (sens[k - 1] + t * (sens[k] - sens[k - 1]))
        pick = k - 1 if abs(d[k - 1]) <= abs(d[k]) else k
    return EERResult(
        eer=float(eer),
        threshold=float(th[pick]),
        sensitivity=float(sens[pick]),
        specificity=float(spec[pick]),
        tolerance=float(abs(d[pick])),
        thresholds=th,
        tpr=sens,
        fpr=1.0 - spec,
    )


# ---------------------------------------------------------------------------
# Splits


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5 + 1e-12))


def stratified_split(y, train_fraction: float, seed, stratify: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Random train/test split keeping both classes on both sides.

    Per class the training count is round(fraction * size) (halves round up),
    clamped to [1, size - 1].  ``seed`` may be an int or a SeedSequence.
    With ``stratify=False`` the rows are sampled jointly and the draw is
    repeated until both sides contain both classes.
    """
    y = np.asarray(y).astype(int)
    if not 0.0 < train_fraction < 1.0:
        raise EvaluationError(f"train fraction must lie in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    if not stratify:
        n_train = min(max(_round_half_up(train_fraction * y.size), 2), y.size - 2)
        for _ in range(1000):
            perm = rng.permutation(y.size)
            tr, te = perm[:n_train], perm[n_train:]
            if len(set(y[tr])) == 2 and len(set(y[te])) == 2:
                return np.sort(tr), np.sort(te)
        raise EvaluationError("could not draw an unstratified split containing both classes")
    train = []
    for c in (1, 0):
        idx = np.flatnonzero(y == c)
        if idx.size < 2:
            raise EvaluationError(f"class {c} has {idx.size} member(s); need >= 2 to split")
        n = min(max(_round_half_up(train_fraction * idx.size), 1), idx.size - 1)
        train.append(rng.permutation(idx)[:n])
    tr = np.sort(np.concatenate(train))
    te = np.setdiff1d(np.arange(y.size), tr)
    return tr, te


# ---------------------------------------------------------------------------
# Grid


@dataclass(frozen=True)
class ExperimentConfig:
    train_fractions: tuple[float, ...] = DEFAULT_FRACTIONS
    feature_counts: tuple[int, ...] = DEFAULT_FEATURE_COUNTS
    iterations: int = 20
    classifiers: tuple[str, ...] = KINDS
    master_seed: int = 0
    working_point: tuple[float, int] = (0.5, 15)
    alpha: float = DEFAULT_ALPHA
    stratify: bool = True
    normalize_on: str = "train"  # or "full"
    ranking: str = "per-cell"  # or "global"
    classifier_params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "train_fractions", tuple(float(f) for f in self.train_fractions))
        object.__setattr__(self, "feature_counts", tuple(int(c) for c in self.feature_counts))
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        object.__setattr__(self, "working_point", (float(self.working_point[0]), int(self.working_point[1])))
        if any(not 0 < f < 1 for f in self.train_fractions):
            raise EvaluationError("train fractions must lie in (0, 1)")
        if self.iterations < 1:
            raise EvaluationError("iterations must be >= 1")
        bad = set(self.classifiers) - set(KINDS)
        if bad:
            raise EvaluationError(f"unknown classifiers {sorted(bad)}")
        if self.normalize_on not in ("train", "full"):
            raise EvaluationError("normalize_on must be 'train' or 'full'")
        if self.ranking not in ("per-cell", "global"):
            raise EvaluationError("ranking must be 'per-cell' or 'global'")

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_CLASSIFIER_PARAMS = {"knn": {"k": 7}, "fknn": {"k": 7, "m": 2.0}, "parzen": {}, "svm": {}}


@dataclass(frozen=True)
class Cell:
    scenario: int
    classifier: str
    train_frac: float
    n_features: int
    iteration: int
    eer: float
    sensitivity: float
    specificity: float
    threshold: float
    n_used_features: int = 0
    n_test_skilled: int = 0
    n_test_novice: int = 0
    tolerance: float = float("nan")
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass
class EvalReport:
    cells: list[Cell]
    class_sizes: dict[int, tuple[int, int]]
    config: ExperimentConfig | None = None

    def __len__(self):
        return len(self.cells)

    def failures(self) -> list[Cell]:
        return [c for c in self.cells if not c.ok]

    def mean_eer(self, classifier=None, scenario=None, train_frac=None, n_features=None) -> float:
        vals = [
            c.eer
            for c in self.cells
            if c.ok
            and (classifier is None or c.classifier == classifier)
            and (scenario is None or c.scenario == scenario)
            and (train_frac is None or math.isclose(c.train_frac, train_frac))
            and (n_features is None or c.n_features == n_features)
        ]
        return float(np.mean(vals)) if vals else float("nan")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for c in self.cells:
                w.writerow(
                    [
                        c.scenario,
                        c.classifier,
                        fmt(c.train_frac),
                        c.n_features,
                        c.iteration,
                        fmt(c.eer),
                        fmt(c.sensitivity),
                        fmt(c.specificity),
                        fmt(c.threshold),
                    ]
                )


def fmt(x: float) -> str:
    """Round-trip float formatting (17 significant digits); NaN becomes empty."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(float(x), ".17g")


def unit_seed(master_seed: int, scenario: int, frac_index: int, iteration: int) -> np.random.SeedSequence:
    """Seed of one (scenario, train fraction, iteration) unit; shared by its cells."""
    return np.random.SeedSequence(master_seed, spawn_key=(scenario, frac_index, iteration))


def _failed(sc, kind, frac, count, it, msg, n_pos=0, n_neg=0):
    nan = float("nan")
    return Cell(sc, kind, frac, count, it, nan, nan, nan, nan, 0, n_pos, n_neg, nan, msg)


def _global_rankings(matrix: FeatureMatrix, config: ExperimentConfig) -> dict[int, tuple[int, ...]]:
    out = {}
    k_max = max(config.feature_counts)
    for sc in sorted(set(matrix.scenario_ids.tolist())):
        sub = matrix.scenario(sc)
        z = apply_normalization(sub.values, fit_normalization(sub.values, np.arange(len(sub))))
        out[sc] = select(z, sub.y, sub.feature_ids, k_max=k_max, alpha=config.alpha).forward_ranking
    return out


def run_unit(matrix: FeatureMatrix, config: ExperimentConfig, scenario: int, frac_index: int, iteration: int, global_ranking=None) -> list[Cell]:
    """All classifier x feature-count cells for one split."""
    frac = config.train_fractions[frac_index]
    sub = matrix.scenario(scenario)
    y = sub.y
    cells: list[Cell] = []
    try:
        tr, te = stratified_split(y, frac, unit_seed(config.master_seed, scenario, frac_index, iteration), config.stratify)
    except Exception as exc:  # noqa: BLE001 - any failure is recorded per cell
        return [
            _failed(scenario, kind, frac, cnt, iteration, f"split: {exc}")
            for cnt in config.feature_counts
            for kind in config.classifiers
        ]
    assert np.intersect1d(tr, te).size == 0, "train/test overlap"
    fit_rows = tr if config.normalize_on == "train" else np.arange(len(sub))
    consts = fit_normalization(sub.values, fit_rows)
    z = apply_normalization(sub.values, consts)
    n_pos, n_neg = int(y[te].sum()), int((1 - y[te]).sum())

    if global_ranking is not None:
        ranking, sel_error = tuple(global_ranking), ""
    else:
        try:
            res = select(z[tr], y[tr], sub.feature_ids, k_max=max(config.feature_counts), alpha=config.alpha, quiet=True)
            ranking, sel_error = res.forward_ranking, ""
        except Exception as exc:  # noqa: BLE001
            ranking, sel_error = (), f"selection: {exc}"
    col = {f: i for i, f in enumerate(sub.feature_ids)}

    for cnt in config.feature_counts:
        feats = [col[f] for f in ranking[:cnt]]
        for kind in config.classifiers:
            if not feats:
                msg = sel_error or "selection: no feature passed the t-test filter"
                cells.append(_failed(scenario, kind, frac, cnt, iteration, msg, n_pos, n_neg))
                continue
            params = {**DEFAULT_CLASSIFIER_PARAMS.get(kind, {}), **config.classifier_params.get(kind, {})}
            try:
                model = make_classifier(kind, **params).fit(z[np.ix_(tr, feats)], y[tr])
                r = compute_eer(model.score(z[np.ix_(te, feats)]), y[te])
            except Exception as exc:  # noqa: BLE001
                cells.append(_failed(scenario, kind, frac, cnt, iteration, f"{kind}: {exc}", n_pos, n_neg))
                continue
            cells.append(
                Cell(
                    scenario, kind, frac, cnt, iteration,
                    r.eer, r.sensitivity, r.specificity, r.threshold,
                    len(feats), n_pos, n_neg, r.tolerance,
                )
            )
    return cells


_WORKER_STATE: dict = {}


def _init_worker(matrix, config, rankings):
    _WORKER_STATE["args"] = (matrix, config, rankings)


def _run_unit_in_worker(unit):
    matrix, config, rankings = _WORKER_STATE["args"]
    sc, fi, it = unit
    return run_unit(matrix, config, sc, fi, it, None if rankings is None else rankings[sc])


def run_grid(matrix: FeatureMatrix, config: ExperimentConfig, workers: int = 1) -> EvalReport:
    """Run every (scenario, fraction, feature count, classifier, iteration) cell.

    Cells sharing (scenario, fraction, iteration) share one split, one
    normalization and one feature ranking, all fitted on training rows.  The
    report is independent of ``workers``.
    """
    scenarios = sorted(set(matrix.scenario_ids.tolist()))
    if not scenarios:
        raise EvaluationError("feature matrix is empty")
    sizes = {}
    for sc in scenarios:
        y = matrix.scenario(sc).y
        sizes[sc] = (int(y.sum()), int((1 - y).sum()))
    rankings = _global_rankings(matrix, config) if config.ranking == "global" else None
    units = [
        (sc, fi, it)
        for sc in scenarios
        for fi in range(len(config.train_fractions))
        for it in range(config.iterations)
    ]
    if workers <= 1:
        results = [run_unit(matrix, config, sc, fi, it, None if rankings is None else rankings[sc]) for sc, fi, it in units]
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(matrix, config, rankings)) as ex:
            results = list(ex.map(_run_unit_in_worker, units, chunksize=max(1, len(units) // (4 * workers))))
    by_unit = dict(zip(units, results))
    cells = []
    # canonical order: scenario, classifier, fraction, feature count, iteration
    for sc in scenarios:
        for kind in config.classifiers:
            for fi in range(len(config.train_fractions)):
                for cnt in config.feature_counts:
                    for it in range(config.iterations):
                        for c in by_unit[(sc, fi, it)]:
                            if c.classifier == kind and c.n_features == cnt:
                                cells.append(c)
    failed = sum(not c.ok for c in cells)
    if failed:
        log.warning("%d of %d cells failed; see the error field", failed, len(cells))
    return EvalReport(cells, sizes, config)


# ---------------------------------------------------------------------------
# Confusion ranges at the working point


@dataclass(frozen=True)
class ConfusionRange:
    classifier: str
    n_skilled: int
    n_novice: int
    skilled_as_skilled: tuple[int, int]
    skilled_as_novice: tuple[int, int]
    novice_as_skilled: tuple[int, int]
    novice_as_novice: tuple[int, int]
    n_cells: int

    def table(self) -> str:
        def rng(r):
            return f"{r[0]}" if r[0] == r[1] else f"{r[0]}-{r[1]}"

        n = self.n_skilled + self.n_novice
        rows = [
            ("", "Classified as skilled", "Classified as novice", ""),
            ("Skilled", rng(self.skilled_as_skilled), rng(self.skilled_as_novice), f"N={self.n_skilled}"),
            ("Novice", rng(self.novice_as_skilled), rng(self.novice_as_novice), f"N={self.n_novice}"),
            ("", f"N={self.n_skilled}", f"N={self.n_novice}", f"N={n}"),
        ]
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        return "\n".join("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def _cells_at(cells, frac, count):
    return [c for c in cells if math.isclose(c.train_frac, frac) and c.n_features == count]


def confusion_ranges(cells: Sequence[Cell], class_sizes: dict[int, tuple[int, int]], working_point=(0.5, 15), classifiers=KINDS) -> dict[str, ConfusionRange]:
    """Per-classifier min-max correct/incorrect counts at the working point.

    Each cell's sensitivity and specificity at its EER threshold are scaled
    to the scenario's full class sizes, so every row of the table sums to its
    class size.
    """
    frac, count = working_point
    at_wp = _cells_at(cells, frac, count)
    out = {}
    for kind in classifiers:
        mine = [c for c in at_wp if c.classifier == kind]
        if not mine:
            raise EvaluationError(f"no cells for classifier {kind} at train_frac={frac}, n_features={count}")
        ok = [c for c in mine if c.ok and not math.isnan(c.sensitivity)]
        if not ok:
            raise EvaluationError(f"all {len(mine)} working-point cells failed for classifier {kind}")
        ns = {class_sizes[c.scenario] for c in ok}
        if len(ns) != 1:
            log.warning("class sizes differ across scenarios for %s; using the first", kind)
        n_s, n_n = class_sizes[ok[0].scenario]
        ss, nn = [], []
        for c in ok:
            s_tot, n_tot = class_sizes[c.scenario]
            ss.append((_round_half_up(c.sensitivity * s_tot), s_tot))
            nn.append((_round_half_up(c.specificity * n_tot), n_tot))
        out[kind] = ConfusionRange(
            classifier=kind,
            n_skilled=n_s,
            n_novice=n_n,
            skilled_as_skilled=(min(a for a, _ in ss), max(a for a, _ in ss)),
            skilled_as_novice=(min(t - a for a, t in ss), max(t - a for a, t in ss)),
            novice_as_skilled=(min(t - a for a, t in nn), max(t - a for a, t in nn)),
            novice_as_novice=(min(a for a, _ in nn), max(a for a, _ in nn)),
            n_cells=len(ok),
        )
    return out


def read_report_csv(path) -> list[Cell]:
    """Parse a report CSV back into cells (extra per-cell fields are not stored)."""
    cells = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != REPORT_COLUMNS:
            raise EvaluationError(f"{path}: expected columns {','.join(REPORT_COLUMNS)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(REPORT_COLUMNS):
                raise EvaluationError(f"{path}:{lineno}: expected {len(REPORT_COLUMNS)} fields, got {len(row)}")
            try:
                f = [float(v) if v != "" else float("nan") for v in (row[5], row[6], row[7], row[8])]
                cells.append(
                    Cell(int(row[0]), row[1], float(row[2]), int(row[3]), int(row[4]), *f,
                         error="" if row[5] != "" else "failed")
                )
            except ValueError as exc:
                raise EvaluationError(f"{path}:{lineno}: {exc}") from None
    return cells
