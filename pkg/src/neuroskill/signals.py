"""Trial data model and derived kinematic signals.

A :class:`Trial` is one tumour-removal segment recorded by the simulator:
tool-tip position (mm), orientation angles (rad), contact force (N), the
aspirator pedal state and a per-sample region tag.  All channels share one
uniform sample rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from typing import Sequence

import numpy as np

LABELS = ("skilled", "novice")

# Region codes used internally; CSV files carry the literal names.
REGION_BG = 0
REGION_NAMES = {0: "BG", 1: "R1", 2: "R2", 3: "R3", 4: "R4"}
REGION_CODES = {name: code for code, name in REGION_NAMES.items()}
REGION_CODES["BACKGROUND"] = REGION_BG

COLORS = ("black", "glioma", "white")
STIFFNESSES_KPA = (3, 9, 15)

# Tumour sequence per scenario: (color, stiffness) for tumours 1..3.
# Scenarios 1-3 fix the color and vary stiffness; 4-6 fix the stiffness
# and vary the color.
SCENARIO_TUMORS = {
    1: (("black", 3), ("black", 9), ("black", 15)),
    2: (("glioma", 3), ("glioma", 9), ("glioma", 15)),
    3: (("white", 3), ("white", 9), ("white", 15)),
    4: (("black", 3), ("glioma", 3), ("white", 3)),
    5: (("black", 9), ("glioma", 9), ("white", 9)),
    6: (("black", 15), ("glioma", 15), ("white", 15)),
}

MIN_SAMPLES = 5  # a third derivative needs a quartic through five samples


class SignalError(ValueError):
    """Raised for malformed channels (too short, mismatched shapes)."""


@dataclass(frozen=True)
class Channel:
    samples: np.ndarray
    sample_rate_hz: float
    name: str = ""

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return (len(self) - 1) / self.sample_rate_hz


@dataclass(frozen=True)
class Trial:
    """One tumour segment of one participant's scenario attempt."""

    trial_id: str
    participant_id: str
    position: tuple[Channel, Channel, Channel]
    angles: tuple[Channel, Channel, Channel]
    force: Channel
    pedal: np.ndarray
    region: np.ndarray
    scenario_id: int
    tumor_id: int
    tumor_color: str
    tumor_stiffness_kpa: int
    label: str

    def __post_init__(self):
        pedal = np.asarray(self.pedal, dtype=bool)
        region = np.asarray(self.region, dtype=np.int8)
        pedal.setflags(write=False)
        region.setflags(write=False)
        object.__setattr__(self, "pedal", pedal)
        object.__setattr__(self, "region", region)
        object.__setattr__(self, "position", tuple(self.position))
        object.__setattr__(self, "angles", tuple(self.angles))

    @property
    def n_samples(self) -> int:
        return len(self.force)

    @property
    def sample_rate_hz(self) -> float:
        return self.force.sample_rate_hz

    @property
    def duration_s(self) -> float:
        return (self.n_samples - 1) / self.sample_rate_hz

    @property
    def y(self) -> int:
        """1 for skilled, 0 for novice."""
        return int(self.label == "skilled")


@dataclass(frozen=True)
class Dataset:
    trials: tuple[Trial, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))

    def __len__(self):
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    @property
    def counts(self) -> dict[str, int]:
        out = {lab: 0 for lab in LABELS}
        for t in self.trials:
            out[t.label] = out.get(t.label, 0) + 1
        return out

    def validate(self) -> list[str]:
        problems = []
        ids = [t.trial_id for t in self.trials]
        if len(set(ids)) != len(ids):
            problems.append("dataset: duplicate trial ids")
        for lab, n in self.counts.items():
            if n < 2:
                problems.append(f"dataset: only {n} trial(s) labelled {lab!r}, need >= 2")
        return problems


@lru_cache(maxsize=None)
def _edge_weights(order: int) -> np.ndarray:
    """Stencils for the ``order``-th derivative at samples 0..order-1 of a series.

    Row i differentiates the degree-(order+1) polynomial through samples
    0..order+1 at sample i, which keeps the edges second-order accurate.
    """
    m = order + 2
    offsets = np.arange(m, dtype=float)
    rows = []
    for i in range(order):
        # Taylor matrix about sample i: sum_k w_k (k - i)^p / p! = [p == order]
        A = np.array([(offsets - i) ** p / factorial(p) for p in range(m)])
        rhs = np.zeros(m)
        rhs[order] = 1.0
        rows.append(np.linalg.solve(A, rhs))
    return np.array(rows)


def _derivative(samples: np.ndarray, dt: float, order: int, interior: np.ndarray | None = None) -> np.ndarray:
    """``order``-th derivative: composed central differences inside, polynomial stencils at the edges.

    ``interior`` may pass the central-difference composition of the previous
    order to avoid recomputing it.
    """
    x = np.asarray(samples, dtype=float)
    if order == 1:
        return np.gradient(x, dt, edge_order=2)  # its edge rule is the quadratic stencil
    prev = interior
    if prev is None:
        prev = x
        for _ in range(order - 1):
            prev = np.gradient(prev, dt, edge_order=2)
    out = np.gradient(prev, dt, edge_order=2)
    w = _edge_weights(order) / dt**order
    m = order + 2
    out[:order] = w @ x[:m]
    out[-order:] = ((-1) ** order * w @ x[::-1][:m])[::-1]
    return out


def differentiate(channel: Channel, order: int = 1) -> Channel:
    """Numerical derivative of ``channel`` of the given order (1-3).

    Interior samples use repeated second-order central differences.  The
    first and last ``order`` samples, where that composition would lean on
    one-sided estimates, are instead differentiated from the polynomial
    through the ``order + 2`` nearest raw samples.  Both are second-order
    accurate; for ``order == 1`` this is exactly ``np.gradient`` with
    ``edge_order=2``.  Units are divided by s**order.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    if len(channel) < MIN_SAMPLES:
        raise SignalError(
            f"channel {channel.name!r} has {len(channel)} samples, need >= {MIN_SAMPLES}"
        )
    out = _derivative(channel.samples, 1.0 / channel.sample_rate_hz, order)
    suffix = {1: "'", 2: "''", 3: "'''"}[order]
    return Channel(out, channel.sample_rate_hz, channel.name + suffix)


def derivatives(samples: np.ndarray, sample_rate_hz: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """First, second and third derivatives of a raw sample array (see :func:`differentiate`)."""
    dt = 1.0 / sample_rate_hz
    x = np.asarray(samples, dtype=float)
    c1 = np.gradient(x, dt, edge_order=2)
    c2 = np.gradient(c1, dt, edge_order=2)
    d1 = c1
    d2 = _derivative(x, dt, 2, interior=c1)
    d3 = _derivative(x, dt, 3, interior=c2)
    return d1, d2, d3


def speed(position: Sequence[Channel]) -> Channel:
    """Pointwise magnitude of the tool-tip velocity."""
    if len(position) != 3:
        raise SignalError("speed needs exactly three position channels")
    n = {len(c) for c in position}
    rates = {c.sample_rate_hz for c in position}
    if len(n) != 1 or len(rates) != 1:
        raise SignalError("position channels differ in length or sample rate")
    vx, vy, vz = (differentiate(c, 1).samples for c in position)
    return Channel(np.sqrt(vx * vx + vy * vy + vz * vz), position[0].sample_rate_hz, "V")


def validate_trial(trial: Trial) -> list[str]:
    """Return every invariant violation found in ``trial`` (empty if well formed)."""
    problems: list[str] = []
    channels = list(trial.position) + list(trial.angles) + [trial.force]
    if len(trial.position) != 3 or len(trial.angles) != 3:
        problems.append("shape: need 3 position and 3 angle channels")
    lengths = {c.name or f"channel{i}": len(c) for i, c in enumerate(channels)}
    n_ref = len(trial.force)
    for name, n in lengths.items():
        if n != n_ref:
            problems.append(f"shape: channel {name} has {n} samples, force has {n_ref}")
    if trial.pedal.shape[0] != n_ref:
        problems.append(f"shape: pedal has {trial.pedal.shape[0]} samples, force has {n_ref}")
    if trial.region.shape[0] != n_ref:
        problems.append(f"shape: region has {trial.region.shape[0]} samples, force has {n_ref}")
    if min(lengths.values(), default=0) < MIN_SAMPLES:
        problems.append(f"shape: channels need >= {MIN_SAMPLES} samples")
    rates = {c.sample_rate_hz for c in channels}
    if len(rates) != 1:
        problems.append(f"rate: channels disagree on sample rate {sorted(rates)}")
    if any(r <= 0 or not np.isfinite(r) for r in rates):
        problems.append("rate: sample rate must be positive")
    for c in channels:
        if not np.all(np.isfinite(c.samples)):
            problems.append(f"values: channel {c.name!r} contains missing or non-finite samples")
    bad_regions = set(np.unique(trial.region).tolist()) - set(REGION_NAMES)
    if bad_regions:
        problems.append(f"values: unknown region codes {sorted(bad_regions)}")
    if trial.label not in LABELS:
        problems.append(f"metadata: label {trial.label!r} not in {LABELS}")
    if trial.scenario_id not in SCENARIO_TUMORS:
        problems.append(f"metadata: scenario_id {trial.scenario_id} not in 1-6")
    elif trial.tumor_id not in (1, 2, 3):
        problems.append(f"metadata: tumor_id {trial.tumor_id} not in 1-3")
    else:
        color, stiff = SCENARIO_TUMORS[trial.scenario_id][trial.tumor_id - 1]
        if trial.tumor_color != color:
            problems.append(
                f"metadata: scenario {trial.scenario_id} tumor {trial.tumor_id} "
                f"must be {color}, got {trial.tumor_color}"
            )
        if trial.tumor_stiffness_kpa != stiff:
            problems.append(
                f"metadata: scenario {trial.scenario_id} tumor {trial.tumor_id} "
                f"must be {stiff} kPa, got {trial.tumor_stiffness_kpa}"
            )
    return problems


def make_trial(
    trial_id: str,
    participant_id: str,
    xyz: np.ndarray,
    rpy: np.ndarray,
    force: np.ndarray,
    pedal: np.ndarray,
    region: np.ndarray,
    scenario_id: int,
    tumor_id: int,
    label: str,
    sample_rate_hz: float,
    tumor_color: str | None = None,
    tumor_stiffness_kpa: int | None = None,
) -> Trial:
    """Build a Trial from raw arrays; tumour metadata defaults to the scenario table."""
    if tumor_color is None or tumor_stiffness_kpa is None:
        color, stiff = SCENARIO_TUMORS[scenario_id][tumor_id - 1]
        tumor_color = color if tumor_color is None else tumor_color
        tumor_stiffness_kpa = stiff if tumor_stiffness_kpa is None else tumor_stiffness_kpa
    xyz = np.asarray(xyz, dtype=float)
    rpy = np.asarray(rpy, dtype=float)
    return Trial(
        trial_id=trial_id,
        participant_id=participant_id,
        position=tuple(Channel(xyz[i], sample_rate_hz, n) for i, n in enumerate("xyz")),
        angles=tuple(Channel(rpy[i], sample_rate_hz, n) for i, n in enumerate(("roll", "pitch", "yaw"))),
        force=Channel(force, sample_rate_hz, "force"),
        pedal=pedal,
        region=region,
        scenario_id=scenario_id,
        tumor_id=tumor_id,
        tumor_color=tumor_color,
        tumor_stiffness_kpa=tumor_stiffness_kpa,
        label=label,
    )
