"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line (with its measurements and wall
time) that is printed in the terminal summary of the run.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import ACCEPTANCE_LINES, build_trial, random_segments
from datasets import NULL_SEEDS, null_scenario, full_size
from feature_oracle import oracle_features
from neuroskill.classifiers import KINDS, KNN, SVM, FuzzyKNN, Parzen
from neuroskill.evaluation import ExperimentConfig, compute_eer, confusion_ranges, run_grid
from neuroskill.features import (
    FEATURE_IDS,
    apply_normalization,
    extract_features,
    fit_normalization,
    force_consistency_metrics,
    iav,
    normalize,
    normalized_jerk,
)
from neuroskill.selection import fisher_criterion, forward_select, ttest_filter, ttest_pvalues

WORKING_POINT = (0.5, 15)


@contextmanager
def criterion(number, title, budget_s):
    """Time the block, record one PASS/FAIL line and fail on an exceeded budget."""
    notes = []
    start = time.perf_counter()
    try:
        yield notes
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        ACCEPTANCE_LINES.append(f"FAIL  [{number}] {title}: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''} ({elapsed:.1f}s)")
        print(ACCEPTANCE_LINES[-1])
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget_s
    status = "PASS" if ok else "FAIL"
    ACCEPTANCE_LINES.append(f"{status}  [{number}] {title}: {'; '.join(notes)} ({elapsed:.1f}s of {budget_s:g}s)")
    print(ACCEPTANCE_LINES[-1])
    assert ok, f"criterion {number} exceeded its {budget_s}s budget ({elapsed:.1f}s)"


def on_line(distances):
    return np.array([[d, 0.0] for d in distances])


def labels(n_pos, n_neg):
    return np.array([1] * n_pos + [0] * n_neg)


class TestAcceptance:
    def test_1_metric_correctness(self):
        with criterion(1, "metric correctness", 1.0) as notes:
            r, omega, T, fs = 10.0, 1.0, 2.0, 1000.0
            t = np.arange(int(round(T * fs)) + 1) / fs
            got = iav(build_trial(np.stack([r * np.cos(omega * t), r * np.sin(omega * t), 0 * t]), fs=fs))
            want = r * omega**2 * T
            assert abs(got - want) <= 0.01 * want, (got, want)
            notes.append(f"IAV circle {got:.4f} vs {want:g}")

            Tm, scale = 1.0, 10.0
            t = np.arange(101) / 100.0
            tau = t / Tm
            x = scale * (10 * tau**3 - 15 * tau**4 + 6 * tau**5)
            got = normalized_jerk(build_trial(np.stack([x, 0 * x, 0 * x]), fs=100.0))
            jerk = lambda s: scale * (60 - 360 * s / Tm + 360 * (s / Tm) ** 2) / Tm**3
            integral, _ = integrate.quad(lambda s: jerk(s) ** 2, 0.0, Tm, epsabs=1e-13, epsrel=1e-13)
            want = math.sqrt(Tm**5 / (2 * scale**2) * integral)
            assert abs(got / want - 1) <= 1e-3, (got, want)
            notes.append(f"min-jerk rel err {abs(got / want - 1):.1e}")

            t = np.arange(1001) / 1000.0
            got = force_consistency_metrics(build_trial(force=t, fs=1000.0))[0]
            assert abs(got / math.sqrt(2) - 1) <= 0.01, got
            notes.append(f"ramp {got:.5f}")

            col = np.array([[1.0], [2.0], [4.0]])
            z = apply_normalization(col, fit_normalization(col, [0, 1, 2]))[:, 0]
            err = float(np.max(np.abs(z - np.exp([-0.25, -0.5, -1.0]))))
            assert err <= 1e-12
            notes.append(f"three-point err {err:.0e}")

    def test_2_invariance_suite(self):
        with criterion(2, "invariance suite", 10.0) as notes:
            worst = 0.0
            for seed in range(5):
                knots = np.random.default_rng(seed).standard_normal((3, 6))

                def path(t, dur):
                    basis = np.stack([np.sin((k + 1) * np.pi * t / dur) / (k + 1) for k in range(6)])
                    return knots @ basis

                t1 = np.arange(401) / 100.0
                t2 = np.arange(801) / 100.0
                a = normalized_jerk(build_trial(path(t1, 4.0), fs=100.0))
                b = normalized_jerk(build_trial(3.0 * path(t2, 8.0), fs=100.0))
                worst = max(worst, abs(b / a - 1))
            assert worst <= 1e-3, worst
            notes.append(f"jerk space x3 / time x2 rel {worst:.1e}")

            worst = 0.0
            for seed in range(10):
                rng = np.random.default_rng(seed)
                f = np.abs(np.cumsum(rng.standard_normal(300))) * 0.01
                base = np.array(force_consistency_metrics(build_trial(force=f)))
                scaled = np.array(force_consistency_metrics(build_trial(force=5.0 * f)))
                worst = max(worst, float(np.max(np.abs(scaled / base - 1))))
            assert worst <= 1e-9, worst
            notes.append(f"force x5 rel {worst:.1e}")

            for seed in range(20):
                rng = np.random.default_rng(seed)
                s = rng.standard_normal(40)
                y = rng.integers(0, 2, 40)
                y[:2] = [0, 1]
                a = compute_eer(s, y)
                for g in (lambda v: np.exp(3 * v) + 7, lambda v: v**3, lambda v: np.arctan(v) * 100 - 4):
                    b = compute_eer(g(s), y)
                    assert (a.eer, a.sensitivity, a.specificity) == (b.eer, b.sensitivity, b.specificity)
            notes.append("EER monotone transforms exact")

            worst = 0.0
            for seed in range(20):
                rng = np.random.default_rng(seed)
                x = rng.standard_normal((40, 6)) + np.linspace(0, 1, 40)[:, None]
                y = labels(15, 25)
                a = rng.uniform(0.1, 10, 6) * rng.choice([-1, 1], 6)
                b = rng.uniform(-100, 100, 6)
                p1, _ = ttest_pvalues(x, y)
                p2, _ = ttest_pvalues(a * x + b, y)
                worst = max(worst, float(np.max(np.abs(p2 / p1 - 1))))
            assert worst <= 1e-9, worst
            notes.append(f"t-test affine rel {worst:.1e}")

    def test_3_oracle_equivalence(self):
        with criterion(3, "oracle equivalence", 120.0) as notes:
            for seed in range(20):
                rng = np.random.default_rng(seed)
                x = rng.standard_normal((40, 8)) @ rng.standard_normal((8, 8))
                y = labels(15, 25)
                x[y == 1] += rng.uniform(0, 1, 8)
                ranking, _ = forward_select(x, y, range(1, 9), 3)
                chosen = []
                for step in range(3):
                    scores = {c: fisher_criterion(x[:, [f - 1 for f in chosen + [c]]], y) for c in range(1, 9) if c not in chosen}
                    best = max(scores, key=lambda c: (scores[c], -c))
                    assert ranking[step] == best, (seed, step, ranking, best)
                    chosen.append(best)
            notes.append("forward selection = exhaustive argmax on 20 seeds")

            rng = np.random.default_rng(2024)
            worst = 0.0
            for _ in range(100):
                segs = random_segments(rng)
                got = extract_features(segs).values
                want = oracle_features(segs)
                for fid in FEATURE_IDS:
                    g, w = got[fid - 1], want[fid]
                    if w == 0:
                        assert g == 0, (fid, g)
                    else:
                        worst = max(worst, abs(g - w) / abs(w))
            assert worst <= 1e-9, worst
            notes.append(f"68 features on 100 trials, worst rel {worst:.1e}")

    def test_4_classifier_sanity(self):
        with criterion(4, "classifier sanity", 60.0) as notes:
            knn = KNN(7).fit(on_line(range(1, 11)), np.array([1, 0, 1, 0, 1, 0, 1, 0, 0, 0]))
            assert knn.score([[0.0, 0.0]])[0] == 4 / 7
            notes.append("KNN 4/7 exact")

            fk = FuzzyKNN(k=2, m=2.0).fit(on_line([1, 2]), np.array([1, 0]))
            err = abs(fk.score([[0.0, 0.0]])[0] - 0.8)
            assert err <= 1e-12
            notes.append(f"FKNN hand case err {err:.0e}")

            rng = np.random.default_rng(7)
            X = rng.standard_normal((40, 4))
            u = FuzzyKNN().fit(X, rng.integers(0, 2, 40)).memberships(np.vstack([rng.standard_normal((200, 4)), X[:5]]))
            err = float(np.max(np.abs(u.sum(axis=1) - 1)))
            assert err <= 1e-9
            notes.append(f"FKNN membership sum err {err:.0e}")

            x = rng.standard_normal((15, 1))
            pz = Parzen(bandwidth=0.4).fit(np.vstack([x, x + 5]), labels(15, 15))
            grid = np.linspace(x.min() - 8 * pz.h_, x.max() + 8 * pz.h_, 20001)
            mass = integrate.trapezoid(np.exp(pz.log_density(grid[:, None], 1)), grid)
            assert abs(mass - 1) <= 1e-3, mass
            notes.append(f"Parzen mass {mass:.6f}")

            xor_x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
            xor_y = np.array([0, 0, 1, 1])
            for seed in range(20):
                rng = np.random.default_rng(seed)
                Xb = np.vstack([rng.uniform(-1, 1, (20, 2)) + 2.0, rng.uniform(-1, 1, (20, 2)) - 2.0])
                yb = labels(20, 20)
                assert np.all((SVM().fit(Xb, yb).score(Xb) > 0) == (yb == 1)), seed
                perm = rng.permutation(4)
                Xx = xor_x[perm] + rng.normal(0, 0.01, (4, 2))
                assert np.all((SVM(C=10.0).fit(Xx, xor_y[perm]).score(Xx) > 0) == (xor_y[perm] == 1)), seed
            notes.append("SVM blobs and XOR separated on 20 seeds")

    def test_5_chance_level_calibration(self):
        with criterion(5, "chance-level calibration", 180.0) as notes:
            m = full_size(0.0)
            cfg = ExperimentConfig(train_fractions=(WORKING_POINT[0],), feature_counts=(WORKING_POINT[1],), iterations=20)
            report = run_grid(m, cfg)
            for kind in KINDS:
                eer = report.mean_eer(kind)
                notes.append(f"{kind} {eer:.3f}")
                assert 0.43 <= eer <= 0.57, (kind, eer)
            notes.append(f"{len(report.failures())} of {len(report)} cells failed")

    def test_6_separability_response(self):
        with criterion(6, "separability response", 180.0) as notes:
            cfg = ExperimentConfig(train_fractions=(WORKING_POINT[0],), feature_counts=(WORKING_POINT[1],), iterations=20,
                                   classifiers=("fknn",))
            sep = run_grid(full_size(3.0), cfg).mean_eer("fknn")
            null = run_grid(full_size(0.0), cfg).mean_eer("fknn")
            notes.append(f"FKNN delta=3 {sep:.4f}, delta=0 {null:.4f}")
            assert sep <= 0.10 and sep < null

    def test_7_protocol_fidelity(self, tmp_path):
        with criterion(7, "protocol fidelity", 600.0) as notes:
            m = full_size(0.0)
            cfg = ExperimentConfig()
            start = time.perf_counter()
            serial = run_grid(m, cfg, workers=1)
            serial_s = time.perf_counter() - start
            assert len(serial) == 6 * 9 * 6 * 4 * 20
            notes.append(f"{len(serial)} cells, serial {serial_s:.0f}s")

            serial.write_csv(tmp_path / "serial.csv")
            run_grid(m, cfg, workers=8).write_csv(tmp_path / "parallel.csv")
            assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "parallel.csv").read_bytes()
            notes.append("8 workers byte-identical")

            assert set(serial.class_sizes.values()) == {(23, 92)}
            ranges = confusion_ranges(serial.cells, serial.class_sizes, working_point=WORKING_POINT)
            for kind, r in ranges.items():
                for (lo_a, hi_a), (lo_b, hi_b), n in (
                    (r.skilled_as_skilled, r.skilled_as_novice, 23),
                    (r.novice_as_novice, r.novice_as_skilled, 92),
                ):
                    assert lo_a + hi_b == n and hi_a + lo_b == n, (kind, r)
                text = r.table()
                assert all(f"N={n}" in text for n in (23, 92, 115)), text
            notes.append("Table 3 rows sum to 23/92/115")

    def test_8_null_selection_calibration(self):
        with criterion(8, "null selection calibration", 600.0) as notes:
            selected = total = 0
            for seed in NULL_SEEDS:
                m = null_scenario(seed)
                z = normalize(m, np.arange(len(m.y)))
                selected += len(ttest_filter(z.values, z.y, FEATURE_IDS, alpha=0.05).filtered_ids)
                total += len(FEATURE_IDS)
            lo, hi = stats.binom.interval(0.95, total, 0.05)
            notes.append(f"{selected}/{total} = {selected / total:.4f} selected, band [{lo:.0f}, {hi:.0f}]")
            assert lo <= selected <= hi
