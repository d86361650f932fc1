import numpy as np
import pytest

from neuroskill.signals import make_trial


def build_trial(xyz=None, rpy=None, force=None, fs=100.0, n=None, pedal=None, region=None,
                scenario_id=1, tumor_id=1, label="skilled", trial_id="T0", participant_id="P0"):
    """Trial from whichever channels are given; the rest are zeros."""
    if n is None:
        for arr in (xyz, rpy, force):
            if arr is not None:
                n = np.shape(arr)[-1]
                break
    xyz = np.zeros((3, n)) if xyz is None else np.asarray(xyz, dtype=float)
    rpy = np.zeros((3, n)) if rpy is None else np.asarray(rpy, dtype=float)
    force = np.zeros(n) if force is None else np.asarray(force, dtype=float)
    pedal = np.zeros(n, dtype=bool) if pedal is None else np.asarray(pedal, dtype=bool)
    region = np.zeros(n, dtype=np.int8) if region is None else np.asarray(region, dtype=np.int8)
    return make_trial(trial_id, participant_id, xyz, rpy, force, pedal, region,
                      scenario_id, tumor_id, label, fs)


def random_segments(rng, n_segments=None, fs=None):
    """One to three short random tumour segments of a single scenario."""
    n_segments = n_segments or int(rng.integers(1, 4))
    fs = fs or float(rng.choice([20.0, 50.0, 100.0]))
    segs = []
    for k in range(n_segments):
        n = int(rng.integers(8, 60))
        xyz = np.cumsum(rng.standard_normal((3, n)), axis=1)
        rpy = np.cumsum(0.05 * rng.standard_normal((3, n)), axis=1)
        force = np.abs(np.cumsum(0.05 * rng.standard_normal(n))) + rng.uniform(0, 0.2)
        # occasional exact plateaus exercise the extremum rules
        if rng.uniform() < 0.5:
            i = int(rng.integers(1, n - 3))
            xyz[0, i + 1] = xyz[0, i]
            force[i + 1] = force[i]
        pedal = rng.uniform(size=n) < 0.3
        region = rng.integers(0, 5, n).astype(np.int8)
        segs.append(build_trial(xyz, rpy, force, fs, pedal=pedal, region=region,
                                tumor_id=k + 1, trial_id=f"R_T{k + 1}"))
    return segs


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
