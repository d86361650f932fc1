"""Trial CSV files with a JSON dataset sidecar, and feature CSV files."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pandas as pd

from neuroskill.evaluation import fmt
from neuroskill.features import FEATURE_COLUMNS, FEATURE_IDS, FeatureMatrix
from neuroskill.signals import REGION_CODES, REGION_NAMES, Trial, make_trial, validate_trial

TRIAL_COLUMNS = ("t", "x", "y", "z", "roll", "pitch", "yaw", "force", "pedal", "region")
DATASET_SIDECAR = "dataset.json"


class FormatError(ValueError):
    """Malformed input file; the message names the file and, where known, the line."""


def write_trial_csv(trial: Trial, path) -> None:
    n = trial.n_samples
    t = np.arange(n) / trial.sample_rate_hz
    cols = {"t": t}
    for c in trial.position:
        cols[c.name] = c.samples
    for c in trial.angles:
        cols[c.name] = c.samples
    cols["force"] = trial.force.samples
    frame = pd.DataFrame(cols)
    frame["pedal"] = trial.pedal.astype(int)
    frame["region"] = np.array([REGION_NAMES[k] for k in range(5)], dtype=object)[trial.region]
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")


def _locate_bad_line(path: Path) -> str:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRIAL_COLUMNS:
            return f"{path}:1: header must be {','.join(TRIAL_COLUMNS)}, got {','.join(header or [])}"
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(TRIAL_COLUMNS):
                return f"{path}:{lineno}: expected {len(TRIAL_COLUMNS)} fields, got {len(row)}"
            try:
                [float(v) for v in row[:8]]
                int(row[8])
            except ValueError:
                return f"{path}:{lineno}: non-numeric value in {row[:9]}"
            if row[9] not in REGION_CODES:
                return f"{path}:{lineno}: unknown region {row[9]!r}"
    return f"{path}: unreadable"


def read_trial_csv(path, meta: dict, trial_id: str) -> Trial:
    """Read one trial file; ``meta`` is its entry from the dataset sidecar."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={c: float for c in TRIAL_COLUMNS[:8]} | {"pedal": int, "region": str},
                            float_precision="round_trip")
    except Exception:
        raise FormatError(_locate_bad_line(path)) from None
    if tuple(frame.columns) != TRIAL_COLUMNS or frame.isna().any().any():
        raise FormatError(_locate_bad_line(path) if tuple(frame.columns) == TRIAL_COLUMNS else
                          f"{path}:1: header must be {','.join(TRIAL_COLUMNS)}, got {','.join(frame.columns)}")
    unknown = set(frame["region"].unique()) - set(REGION_CODES)
    if unknown:
        raise FormatError(_locate_bad_line(path))
    fs = float(meta["sample_rate_hz"])
    t = frame["t"].to_numpy()
    if t.size > 1 and not np.allclose(np.diff(t), 1.0 / fs, rtol=1e-6, atol=1e-9):
        raise FormatError(f"{path}: samples are not uniformly spaced at {fs} Hz; resampling is not supported")
    region = frame["region"].map(REGION_CODES).to_numpy(dtype=np.int8)
    trial = make_trial(
        trial_id=trial_id,
        participant_id=meta["participant_id"],
        xyz=frame[["x", "y", "z"]].to_numpy().T,
        rpy=frame[["roll", "pitch", "yaw"]].to_numpy().T,
        force=frame["force"].to_numpy(),
        pedal=frame["pedal"].to_numpy() != 0,
        region=region,
        scenario_id=int(meta["scenario_id"]),
        tumor_id=int(meta["tumor_id"]),
        label=meta["label"],
        sample_rate_hz=fs,
        tumor_color=meta["tumor_color"],
        tumor_stiffness_kpa=int(meta["tumor_stiffness_kpa"]),
    )
    problems = validate_trial(trial)
    if problems:
        raise FormatError(f"{path}: " + "; ".join(problems))
    return trial


def trial_meta(trial: Trial) -> dict:
    return {
        "participant_id": trial.participant_id,
        "scenario_id": trial.scenario_id,
        "tumor_id": trial.tumor_id,
        "tumor_color": trial.tumor_color,
        "tumor_stiffness_kpa": trial.tumor_stiffness_kpa,
        "label": trial.label,
        "sample_rate_hz": trial.sample_rate_hz,
        "file": f"{trial.trial_id}.csv",
    }


class DatasetWriter:
    """Stream trials into a directory, then write the sidecar on close."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.entries: dict[str, dict] = {}

    def add(self, trial: Trial) -> None:
        if trial.trial_id in self.entries:
            raise ValueError(f"duplicate trial id {trial.trial_id}")
        meta = trial_meta(trial)
        write_trial_csv(trial, self.out_dir / meta["file"])
        self.entries[trial.trial_id] = meta

    def close(self, extra: dict | None = None) -> Path:
        path = self.out_dir / DATASET_SIDECAR
        doc = {"trials": self.entries}
        if extra:
            doc.update(extra)
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
        return path


def read_sidecar(in_dir) -> dict:
    path = Path(in_dir) / DATASET_SIDECAR
    if not path.exists():
        raise FormatError(f"{path}: dataset sidecar not found")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if "trials" not in doc:
        raise FormatError(f"{path}: missing 'trials' mapping")
    return doc


def iter_scenario_recordings(in_dir):
    """Yield ``(participant_id, label, scenario_id, [segments])`` from a dataset directory."""
    in_dir = Path(in_dir)
    doc = read_sidecar(in_dir)
    groups: dict[tuple[str, int], list[tuple[int, str, dict]]] = {}
    for tid, meta in doc["trials"].items():
        key = (meta["participant_id"], int(meta["scenario_id"]))
        groups.setdefault(key, []).append((int(meta["tumor_id"]), tid, meta))
    for (pid, sc) in sorted(groups):
        parts = sorted(groups[(pid, sc)])
        labels = {m["label"] for _, _, m in parts}
        if len(labels) != 1:
            raise FormatError(f"participant {pid} scenario {sc}: inconsistent labels {sorted(labels)}")
        segs = [read_trial_csv(in_dir / m.get("file", f"{tid}.csv"), m, tid) for _, tid, m in parts]
        yield pid, labels.pop(), sc, segs


def write_features_csv(matrix: FeatureMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("trial_id", "label", "scenario_id") + FEATURE_COLUMNS)
        for i in range(len(matrix)):
            w.writerow([matrix.trial_ids[i], matrix.labels[i], int(matrix.scenario_ids[i])] + [fmt(v) for v in matrix.values[i]])


def read_features_csv(path) -> FeatureMatrix:
    path = Path(path)
    expected = ("trial_id", "label", "scenario_id") + FEATURE_COLUMNS
    ids, labels, scen, rows = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FormatError(f"{path}:1: empty file")
        if tuple(header) != expected:
            missing = [c for c in expected if c not in header]
            extra = [c for c in header if c not in expected]
            raise FormatError(f"{path}:1: column mismatch; missing {missing}, unexpected {extra}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise FormatError(f"{path}:{lineno}: expected {len(expected)} fields, got {len(row)}")
            if row[1] not in ("skilled", "novice"):
                raise FormatError(f"{path}:{lineno}: label must be skilled or novice, got {row[1]!r}")
            try:
                scen.append(int(row[2]))
                rows.append([float(v) for v in row[3:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            ids.append(row[0])
            labels.append(row[1])
    values = np.array(rows, dtype=float).reshape(len(rows), len(FEATURE_IDS))
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise FormatError(f"{path}:{bad[0] + 2}: non-finite value in {FEATURE_COLUMNS[bad[1]]}")
    return FeatureMatrix(values, labels, ids, scen)
