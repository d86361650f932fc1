"""The 68-feature catalog, its extraction from trials, and exponential normalization.

Features are computed on a *recording*: one trial, or the three tumour
segments of a scenario taken together.  Derivatives, integrals, extremum
counts and successive differences are evaluated within each segment and
accumulated, so the rest intervals between tumours never contribute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from neuroskill import _kernels
from neuroskill.signals import MIN_SAMPLES, SignalError, Trial, derivatives, validate_trial

N_FEATURES = 68
FORCE_THRESHOLD_N = 0.1
ARREST_FRACTION = 0.1
DEFAULT_LOWPASS_HZ = 2.0


class FeatureError(ValueError):
    """A feature could not be computed; ``feature_id`` names it."""

    def __init__(self, feature_id: int, message: str):
        super().__init__(f"feature {feature_id}: {message}")
        self.feature_id = feature_id


class Recording:
    """Raw and derived signals of one or more consecutive trial segments."""

    def __init__(self, trials: Sequence[Trial]):
        if isinstance(trials, Trial):
            trials = [trials]
        if not trials:
            raise SignalError("a recording needs at least one trial")
        rates = {t.sample_rate_hz for t in trials}
        if len(rates) != 1:
            raise SignalError(f"segments disagree on sample rate: {sorted(rates)}")
        self.fs = rates.pop()
        self.bounds = []
        start = 0
        for t in trials:
            if t.n_samples < MIN_SAMPLES:
                raise SignalError(f"trial {t.trial_id} has {t.n_samples} samples, need >= {MIN_SAMPLES}")
            self.bounds.append((start, start + t.n_samples))
            start += t.n_samples
        self.n = start
        self.T = sum(t.duration_s for t in trials)

        sig: dict[str, list[np.ndarray]] = {}
        raw = {
            "x": [t.position[0].samples for t in trials],
            "y": [t.position[1].samples for t in trials],
            "z": [t.position[2].samples for t in trials],
            "roll": [t.angles[0].samples for t in trials],
            "pitch": [t.angles[1].samples for t in trials],
            "yaw": [t.angles[2].samples for t in trials],
            "f": [t.force.samples for t in trials],
        }
        for name, parts in raw.items():
            sig[name] = parts
            d1, d2, d3 = zip(*(derivatives(p, self.fs) for p in parts))
            sig["v" + name], sig["a" + name], sig["j" + name] = list(d1), list(d2), list(d3)
        self.signals = {k: np.concatenate(v) for k, v in sig.items()}
        s = self.signals
        s["V"] = np.sqrt(s["vx"] ** 2 + s["vy"] ** 2 + s["vz"] ** 2)
        s["A"] = np.sqrt(s["ax"] ** 2 + s["ay"] ** 2 + s["az"] ** 2)
        self.pedal = np.concatenate([t.pedal for t in trials])
        self.region = np.concatenate([t.region for t in trials])
        times = []
        offset = 0.0
        for t in trials:
            times.append(offset + np.arange(t.n_samples) / self.fs)
            offset += t.duration_s
        self.times = np.concatenate(times)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.signals[name]

    def segments(self, arr: np.ndarray):
        for a, b in self.bounds:
            yield arr[a:b]

    def integral(self, arr: np.ndarray) -> float:
        dt = 1.0 / self.fs
        return float(sum(np.trapezoid(seg, dx=dt) for seg in self.segments(arr)))

    def telescope(self, arr: np.ndarray) -> float:
        """Sum of signed successive differences within segments."""
        return float(sum(seg[-1] - seg[0] for seg in self.segments(arr)))

    def n_max(self, arr: np.ndarray) -> int:
        return sum(_kernels.extrema_counts(seg)[0] for seg in self.segments(arr))

    def n_min(self, arr: np.ndarray) -> int:
        return sum(_kernels.extrema_counts(seg)[1] for seg in self.segments(arr))

    def n_extremum(self, arr: np.ndarray) -> int:
        return sum(sum(_kernels.extrema_counts(seg)) for seg in self.segments(arr))

    def zero_crossings(self, arr: np.ndarray) -> int:
        return sum(_kernels.zero_crossings(seg) for seg in self.segments(arr))

    def rising_edges(self) -> int:
        return int(sum(np.count_nonzero(seg[1:] & ~seg[:-1]) for seg in self.segments(self.pedal)))

    def t_argmax(self, arr: np.ndarray) -> float:
        return float(self.times[int(np.argmax(arr))])

    def t_argmin(self, arr: np.ndarray) -> float:
        return float(self.times[int(np.argmin(arr))])

    def path_length(self) -> float:
        total = 0.0
        for a, b in self.bounds:
            d = np.diff(np.stack([self["x"][a:b], self["y"][a:b], self["z"][a:b]]), axis=1)
            total += float(np.sum(np.sqrt(np.sum(d * d, axis=0))))
        return total


# ---------------------------------------------------------------------------
# Named metrics


def iav(trial) -> float:
    """Time integral of the acceleration magnitude (mm/s)."""
    rec = _as_recording(trial)
    return rec.integral(rec["A"])


def normalized_jerk(trial, flags: set | None = None) -> float:
    """Dimensionless jerk, sqrt(T^5 / (2 A_m^2) * integral |jerk|^2).

    ``A_m`` is the tool-tip path length.  A stationary tool gives 0 and adds
    ``"normalized_jerk"`` to ``flags`` when a set is passed.
    """
    rec = _as_recording(trial)
    amp = rec.path_length()
    if amp == 0.0:
        if flags is not None:
            flags.add("normalized_jerk")
        return 0.0
    jsq = rec["jx"] ** 2 + rec["jy"] ** 2 + rec["jz"] ** 2
    return math.sqrt(rec.T**5 / (2.0 * amp * amp) * rec.integral(jsq))


def force_consistency_metrics(trial, flags: set | None = None) -> tuple[float, float, float]:
    """Force-derivative consistency/smoothness metrics normalised by the force IQR.

    Returns ``(df_metric, d2f_metric, d3f_metric)`` =
    sqrt(T^(2k-1) / (2 iqr(f)^2) * integral (d^k f/dt^k)^2) for k = 1, 2, 3.
    Constant force (zero IQR) yields zeros and flags ``"force_iqr"``.
    """
    rec = _as_recording(trial)
    q = _iqr(rec["f"])
    if q == 0.0:
        if flags is not None:
            flags.add("force_iqr")
        return 0.0, 0.0, 0.0
    out = []
    for power, name in ((1, "vf"), (3, "af"), (5, "jf")):
        d = rec[name]
        out.append(math.sqrt(rec.T**power / (2.0 * q * q) * rec.integral(d * d)))
    return tuple(out)


def _as_recording(obj) -> Recording:
    return obj if isinstance(obj, Recording) else Recording(obj)


def _iqr(a: np.ndarray) -> float:
    q75, q25 = np.percentile(a, [75.0, 25.0])
    return float(q75 - q25)


def _ratio(num: float, den: float, fid: int, flags: set) -> float:
    if den == 0.0:
        flags.add(fid)
        return 0.0
    return num / den


def _band_power_ratio(rec: Recording, cutoff_hz: float, fid: int, flags: set) -> float:
    low = high = 0.0
    for seg in rec.segments(rec["f"]):
        p = np.abs(np.fft.rfft(seg - seg.mean())) ** 2
        freq = np.fft.rfftfreq(seg.shape[0], 1.0 / rec.fs)
        low += float(p[(freq > 0) & (freq < cutoff_hz)].sum())
        high += float(p[freq >= cutoff_hz].sum())
    return _ratio(low, high, fid, flags)


def _peak_integral(rec: Recording, fid: int, flags: set) -> float:
    f = rec["f"]
    k = int(np.argmax(f))
    peak = f[k]
    if peak <= 0.0:
        flags.add(fid)
        return 0.0
    half = peak / 2.0
    a, b = next((a, b) for a, b in rec.bounds if a <= k < b)
    lo = k
    while lo > a and f[lo - 1] >= half:
        lo -= 1
    hi = k
    while hi < b - 1 and f[hi + 1] >= half:
        hi += 1
    return float(np.trapezoid(f[lo : hi + 1], dx=1.0 / rec.fs))


def _force_eq(rec: Recording, which: int, fid: int, flags: set) -> float:
    local: set = set()
    vals = force_consistency_metrics(rec, local)
    if local:
        flags.add(fid)
    return vals[which]


# ---------------------------------------------------------------------------
# Catalog


@dataclass(frozen=True)
class FeatureDefinition:
    id: int
    formula_tag: str
    description: str
    force_based: bool
    tier: int | None  # 15: in the reference best-15 ranking, 30: best 30, None otherwise
    compute: Callable = field(repr=False, compare=False)


def _r(fid, tag, desc, force, tier, fn):
    return FeatureDefinition(fid, tag, desc, force, tier, fn)


def _std(a):
    return float(np.std(a))


def _range(a):
    return float(np.max(a) - np.min(a))


# fmt: off
CATALOG: tuple[FeatureDefinition, ...] = (
    _r(1, "time_fraction", "fraction of samples with jerk j_x <= 0", False, None,
       lambda r, fl: float(np.count_nonzero(r["jx"] <= 0)) / r.n),
    _r(2, "count", "number of force samples above 0.1 N", True, None,
       lambda r, fl: float(np.count_nonzero(r["f"] > FORCE_THRESHOLD_N))),
    _r(3, "ratio", "std(f) / std(v_x)", True, 30,
       lambda r, fl: _ratio(_std(r["f"]), _std(r["vx"]), 3, fl)),
    _r(4, "product", "range(v_x) * range(v_y) * range(v_z)", False, None,
       lambda r, fl: _range(r["vx"]) * _range(r["vy"]) * _range(r["vz"])),
    _r(5, "iqr", "interquartile range of force", True, None,
       lambda r, fl: _iqr(r["f"])),
    _r(6, "force_metric", "d2f metric: sqrt(T^3/(2 iqr(f)^2) * integral a_f^2)", True, None,
       lambda r, fl: _force_eq(r, 1, 6, fl)),
    _r(7, "successive_diff", "sum of successive force differences / T", True, None,
       lambda r, fl: r.telescope(r["f"]) / r.T),
    _r(8, "successive_diff", "sum of successive speed differences / (T * std(f))", True, 15,
       lambda r, fl: _ratio(r.telescope(r["V"]), r.T * _std(r["f"]), 8, fl)),
    _r(9, "time_of_max", "time of max(a_x) / T", False, 15,
       lambda r, fl: r.t_argmax(r["ax"]) / r.T),
    _r(10, "zero_crossings", "zero crossings of v_x", False, 30,
       lambda r, fl: float(r.zero_crossings(r["vx"]))),
    _r(11, "time_of_min", "time of min(a_y) / T", False, 30,
       lambda r, fl: r.t_argmin(r["ay"]) / r.T),
    _r(12, "time_of_max", "time of max(a_z) / T", False, None,
       lambda r, fl: r.t_argmax(r["az"]) / r.T),
    _r(13, "extrema", "local extrema of Pitch", False, None,
       lambda r, fl: float(r.n_extremum(r["pitch"]))),
    _r(14, "time_of_min", "time of min(a_f) / T", True, 30,
       lambda r, fl: r.t_argmin(r["af"]) / r.T),
    _r(15, "mean", "mean speed", False, None,
       lambda r, fl: float(np.mean(r["V"]))),
    _r(16, "ratio", "std(f) / std(v_z)", True, 30,
       lambda r, fl: _ratio(_std(r["f"]), _std(r["vz"]), 16, fl)),
    _r(17, "band_ratio", "force periodogram power below / above 2 Hz", True, 15,
       lambda r, fl: _band_power_ratio(r, DEFAULT_LOWPASS_HZ, 17, fl)),
    _r(18, "time_of_max", "time of max(z) / T", False, None,
       lambda r, fl: r.t_argmax(r["z"]) / r.T),
    _r(19, "extrema", "local extrema of v_f", True, None,
       lambda r, fl: float(r.n_extremum(r["vf"]))),
    _r(20, "minima", "local minima of a_x", False, 15,
       lambda r, fl: float(r.n_min(r["ax"]))),
    _r(21, "minima", "local minima of a_y", False, None,
       lambda r, fl: float(r.n_min(r["ay"]))),
    _r(22, "maxima", "local maxima of x + y + z", False, None,
       lambda r, fl: float(r.n_max(r["x"]) + r.n_max(r["y"]) + r.n_max(r["z"]))),
    _r(23, "extrema", "local extrema of x", False, 15,
       lambda r, fl: float(r.n_extremum(r["x"]))),
    _r(24, "extrema", "local extrema of z", False, None,
       lambda r, fl: float(r.n_extremum(r["z"]))),
    _r(25, "successive_diff", "sum of successive Pitch differences / T", False, None,
       lambda r, fl: r.telescope(r["pitch"]) / r.T),
    _r(26, "successive_diff", "sum of successive v_Roll differences / T", False, None,
       lambda r, fl: r.telescope(r["vroll"]) / r.T),
    _r(27, "ratio", "mean(Roll) * T / range(v_Roll)", False, 30,
       lambda r, fl: _ratio(float(np.mean(r["roll"])) * r.T, _range(r["vroll"]), 27, fl)),
    _r(28, "minima", "local minima of Yaw + Pitch + Roll", False, None,
       lambda r, fl: float(r.n_min(r["yaw"]) + r.n_min(r["pitch"]) + r.n_min(r["roll"]))),
    _r(29, "extrema", "local extrema of Pitch (duplicate of 13)", False, None,
       lambda r, fl: float(r.n_extremum(r["pitch"]))),
    _r(30, "extrema", "local extrema of v_Yaw", False, None,
       lambda r, fl: float(r.n_extremum(r["vyaw"]))),
    _r(31, "extrema", "local extrema of v_Roll", False, 15,
       lambda r, fl: float(r.n_extremum(r["vroll"]))),
    _r(32, "time_span", "(time of max(Pitch) - time of min(Pitch)) / T", False, 30,
       lambda r, fl: (r.t_argmax(r["pitch"]) - r.t_argmin(r["pitch"])) / r.T),
    _r(33, "rate", "pedal activations (rising edges) / T", False, None,
       lambda r, fl: r.rising_edges() / r.T),
    _r(34, "region_sum", "sum of force samples in region R3", True, None,
       lambda r, fl: float(np.sum(r["f"][r.region == 3]))),
    _r(35, "extrema", "local extrema of f", True, 30,
       lambda r, fl: float(r.n_extremum(r["f"]))),
    _r(36, "region_sum", "sum of force samples in region R4 (beneath the tumour)", True, 30,
       lambda r, fl: float(np.sum(r["f"][r.region == 4]))),
    _r(37, "range", "max(f) - min(f)", True, None,
       lambda r, fl: _range(r["f"])),
    _r(38, "std", "std(f)", True, None,
       lambda r, fl: _std(r["f"])),
    _r(39, "product", "iqr(x) * iqr(y) * iqr(z)", False, None,
       lambda r, fl: _iqr(r["x"]) * _iqr(r["y"]) * _iqr(r["z"])),
    _r(40, "force_metric", "df metric: sqrt(T/(2 iqr(f)^2) * integral v_f^2)", True, 15,
       lambda r, fl: _force_eq(r, 0, 40, fl)),
    _r(41, "sum", "sum over samples of |a|", False, None,
       lambda r, fl: float(np.sum(r["A"]))),
    _r(42, "successive_diff", "sum of successive |a| differences / T", False, 30,
       lambda r, fl: r.telescope(r["A"]) / r.T),
    _r(43, "peak_integral", "integral of f over the half-maximum run around its peak", True, None,
       lambda r, fl: _peak_integral(r, 43, fl)),
    _r(44, "time_of_min", "time of min(a_x) / T", False, 30,
       lambda r, fl: r.t_argmin(r["ax"]) / r.T),
    _r(45, "time_of_max", "time of max(a_y) / T", False, 15,
       lambda r, fl: r.t_argmax(r["ay"]) / r.T),
    _r(46, "zero_crossings", "zero crossings of v_y", False, None,
       lambda r, fl: float(r.zero_crossings(r["vy"]))),
    _r(47, "time_of_min", "time of min(a_z) / T", False, 15,
       lambda r, fl: r.t_argmin(r["az"]) / r.T),
    _r(48, "time_of_max", "time of max(a_f) / T", True, 30,
       lambda r, fl: r.t_argmax(r["af"]) / r.T),
    _r(49, "max", "max speed", False, None,
       lambda r, fl: float(np.max(r["V"]))),
    _r(50, "force_metric", "d3f metric: sqrt(T^5/(2 iqr(f)^2) * integral j_f^2)", True, 15,
       lambda r, fl: _force_eq(r, 2, 50, fl)),
    _r(51, "ratio", "std(f) / std(v_y)", True, 15,
       lambda r, fl: _ratio(_std(r["f"]), _std(r["vy"]), 51, fl)),
    _r(52, "minima", "local minima of x", False, 30,
       lambda r, fl: float(r.n_min(r["x"]))),
    _r(53, "minima", "local minima of v_x", False, 15,
       lambda r, fl: float(r.n_min(r["vx"]))),
    _r(54, "index_ratio", "(1-based index of max f) / (1-based index of min f)", True, 15,
       lambda r, fl: (int(np.argmax(r["f"])) + 1) / (int(np.argmin(r["f"])) + 1)),
    _r(55, "extrema", "local extrema of a_f", True, None,
       lambda r, fl: float(r.n_extremum(r["af"]))),
    _r(56, "ratio", "samples with v_f >= 0 / samples with v_f <= 0", True, None,
       lambda r, fl: _ratio(float(np.count_nonzero(r["vf"] >= 0)), float(np.count_nonzero(r["vf"] <= 0)), 56, fl)),
    _r(57, "minima", "local minima of x + y + z", False, None,
       lambda r, fl: float(r.n_min(r["x"]) + r.n_min(r["y"]) + r.n_min(r["z"]))),
    _r(58, "extrema", "local extrema of y", False, None,
       lambda r, fl: float(r.n_extremum(r["y"]))),
    _r(59, "successive_diff", "sum of successive Yaw differences", False, 30,
       lambda r, fl: r.telescope(r["yaw"])),
    _r(60, "successive_diff", "sum of successive v_Pitch differences / T", False, None,
       lambda r, fl: r.telescope(r["vpitch"]) / r.T),
    _r(61, "ratio", "mean(Pitch) * T / range(v_Pitch)", False, None,
       lambda r, fl: _ratio(float(np.mean(r["pitch"])) * r.T, _range(r["vpitch"]), 61, fl)),
    _r(62, "maxima", "local maxima of Yaw + Pitch + Roll", False, 15,
       lambda r, fl: float(r.n_max(r["yaw"]) + r.n_max(r["pitch"]) + r.n_max(r["roll"]))),
    _r(63, "extrema", "local extrema of Yaw", False, None,
       lambda r, fl: float(r.n_extremum(r["yaw"]))),
    _r(64, "extrema", "local extrema of Roll", False, 15,
       lambda r, fl: float(r.n_extremum(r["roll"]))),
    _r(65, "extrema", "local extrema of v_Pitch", False, 30,
       lambda r, fl: float(r.n_extremum(r["vpitch"]))),
    _r(66, "successive_diff", "sum of successive j_Pitch differences / mean(j_Pitch)", False, None,
       lambda r, fl: _ratio(r.telescope(r["jpitch"]), float(np.mean(r["jpitch"])), 66, fl)),
    _r(67, "time_span", "(time of max(Yaw) - time of min(Yaw)) / T", False, None,
       lambda r, fl: (r.t_argmax(r["yaw"]) - r.t_argmin(r["yaw"])) / r.T),
    _r(68, "region_sum", "sum of force samples in region R1", True, None,
       lambda r, fl: float(np.sum(r["f"][r.region == 1]))),
)
# fmt: on

FEATURE_IDS = tuple(d.id for d in CATALOG)
FEATURE_COLUMNS = tuple(f"f{i:02d}" for i in FEATURE_IDS)


def catalog_reference() -> str:
    """Markdown table mapping every catalog id to its operational definition."""
    lines = [
        "| id | kind | definition | force | tier |",
        "|---:|------|------------|:-----:|:----:|",
    ]
    for d in CATALOG:
        tier = {15: "best 15", 30: "best 30"}.get(d.tier, "")
        lines.append(f"| {d.id} | {d.formula_tag} | {d.description} | {'yes' if d.force_based else ''} | {tier} |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Extraction


@dataclass(frozen=True)
class FeatureVector:
    trial_id: str
    values: np.ndarray
    degenerate: frozenset = frozenset()


def extract_features(trials, trial_id: str | None = None) -> FeatureVector:
    """Compute all 68 catalog features from a trial or a list of segments.

    Ratios whose denominator vanishes resolve to 0 and their ids are
    returned in ``FeatureVector.degenerate``.  A non-finite result raises
    :class:`FeatureError` naming the feature.
    """
    segs = [trials] if isinstance(trials, Trial) else list(trials)
    for t in segs:
        problems = validate_trial(t)
        if problems:
            raise SignalError(f"trial {t.trial_id}: " + "; ".join(problems))
    rec = Recording(segs)
    if trial_id is None:
        trial_id = segs[0].trial_id if len(segs) == 1 else f"{segs[0].participant_id}_S{segs[0].scenario_id}"
    flags: set = set()
    values = np.empty(N_FEATURES)
    for k, d in enumerate(CATALOG):
        v = float(d.compute(rec, flags))
        if not math.isfinite(v):
            raise FeatureError(d.id, f"non-finite value {v} for {trial_id}")
        values[k] = v
    values.setflags(write=False)
    return FeatureVector(trial_id, values, frozenset(flags))


# ---------------------------------------------------------------------------
# Feature matrices and normalization


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    labels: np.ndarray
    trial_ids: tuple[str, ...]
    scenario_ids: np.ndarray
    feature_ids: tuple[int, ...] = FEATURE_IDS
    normalized: bool = False
    constants: np.ndarray | None = None
    zero_constant: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=object))
        object.__setattr__(self, "trial_ids", tuple(self.trial_ids))
        object.__setattr__(self, "scenario_ids", np.asarray(self.scenario_ids, dtype=int))
        object.__setattr__(self, "feature_ids", tuple(self.feature_ids))
        n, m = self.values.shape
        if len(self.labels) != n or len(self.trial_ids) != n or len(self.scenario_ids) != n:
            raise ValueError("values, labels, trial_ids and scenario_ids disagree on row count")
        if len(self.feature_ids) != m:
            raise ValueError(f"{m} value columns but {len(self.feature_ids)} feature ids")

    @property
    def y(self) -> np.ndarray:
        return (self.labels == "skilled").astype(int)

    def __len__(self):
        return self.values.shape[0]

    def rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx)
        return FeatureMatrix(
            self.values[idx],
            self.labels[idx],
            [self.trial_ids[i] for i in np.arange(len(self))[idx]],
            self.scenario_ids[idx],
            self.feature_ids,
            self.normalized,
            self.constants,
            self.zero_constant,
        )

    def scenario(self, scenario_id: int) -> "FeatureMatrix":
        return self.rows(np.flatnonzero(self.scenario_ids == scenario_id))

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], labels, scenario_ids) -> "FeatureMatrix":
        return cls(
            np.stack([v.values for v in vectors]) if vectors else np.empty((0, N_FEATURES)),
            labels,
            [v.trial_id for v in vectors],
            scenario_ids,
        )


def fit_normalization(values: np.ndarray, training_rows) -> np.ndarray:
    """Per-feature max |x| over the training rows."""
    rows = np.asarray(training_rows)
    if rows.size == 0:
        raise ValueError("normalization needs at least one training row")
    return np.max(np.abs(values[rows]), axis=0)


def apply_normalization(values: np.ndarray, constants: np.ndarray) -> np.ndarray:
    """Map x -> exp(-x / M); columns with M == 0 map to 1."""
    zero = constants == 0
    safe = np.where(zero, 1.0, constants)
    out = np.exp(-values / safe)
    out[:, zero] = 1.0
    return out


def normalize(matrix: FeatureMatrix, training_rows) -> FeatureMatrix:
    """Exponentially normalise every cell with constants fitted on ``training_rows``."""
    consts = fit_normalization(matrix.values, training_rows)
    return FeatureMatrix(
        apply_normalization(matrix.values, consts),
        matrix.labels,
        matrix.trial_ids,
        matrix.scenario_ids,
        matrix.feature_ids,
        normalized=True,
        constants=consts,
        zero_constant=consts == 0,
    )
