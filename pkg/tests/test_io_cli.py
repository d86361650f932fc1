import json

import numpy as np
import pytest

from neuroskill import cli
from neuroskill.datagen import GeneratorConfig, generate_trial
from neuroskill.features import FEATURE_COLUMNS, FeatureMatrix
from neuroskill.trial_io import (
    DatasetWriter,
    FormatError,
    iter_scenario_recordings,
    read_features_csv,
    read_trial_csv,
    trial_meta,
    write_features_csv,
    write_trial_csv,
)

SMALL_GEN = ["--n-skilled", "4", "--n-novice", "6", "--segment-duration", "4", "--scenarios", "1", "2"]
SMALL_GRID = ["--train-fractions", "0.5", "--feature-counts", "3", "--iterations", "2", "--working-point", "0.5", "3"]


@pytest.fixture
def trial():
    return generate_trial(GeneratorConfig(segment_duration_s=3.0, delta=1.0), 3, 2, 1)


class TestTrialFiles:
    def test_round_trip(self, tmp_path, trial):
        path = tmp_path / "t.csv"
        write_trial_csv(trial, path)
        back = read_trial_csv(path, trial_meta(trial), trial.trial_id)
        for a, b in zip(trial.position + trial.angles + (trial.force,), back.position + back.angles + (back.force,)):
            assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(trial.pedal, back.pedal) and np.array_equal(trial.region, back.region)
        assert (back.label, back.tumor_color, back.tumor_stiffness_kpa) == (trial.label, trial.tumor_color, trial.tumor_stiffness_kpa)

    def test_region_names(self, tmp_path, trial):
        path = tmp_path / "t.csv"
        write_trial_csv(trial, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,x,y,z,roll,pitch,yaw,force,pedal,region"
        assert {ln.rsplit(",", 1)[1] for ln in lines[1:]} <= {"BG", "R1", "R2", "R3", "R4"}

    @pytest.mark.parametrize("line, edit, message", [
        (5, lambda f: f[:3] + ["oops"] + f[4:], "non-numeric"),
        (7, lambda f: f[:-1], "fields"),
        (9, lambda f: f[:-1] + ["R9"], "unknown region"),
    ])
    def test_malformed_line_is_named(self, tmp_path, trial, line, edit, message):
        path = tmp_path / "t.csv"
        write_trial_csv(trial, path)
        lines = path.read_text().splitlines()
        lines[line - 1] = ",".join(edit(lines[line - 1].split(",")))
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(FormatError, match=rf"t\.csv:{line}: .*{message}"):
            read_trial_csv(path, trial_meta(trial), trial.trial_id)

    def test_wrong_header(self, tmp_path, trial):
        path = tmp_path / "t.csv"
        write_trial_csv(trial, path)
        text = path.read_text().replace("pitch", "tilt", 1)
        path.write_text(text)
        with pytest.raises(FormatError, match=":1: header"):
            read_trial_csv(path, trial_meta(trial), trial.trial_id)

    def test_nonuniform_sampling_rejected(self, tmp_path, trial):
        path = tmp_path / "t.csv"
        write_trial_csv(trial, path)
        lines = path.read_text().splitlines()
        f = lines[10].split(",")
        f[0] = "0.0951"
        lines[10] = ",".join(f)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(FormatError, match="uniformly"):
            read_trial_csv(path, trial_meta(trial), trial.trial_id)

    def test_metadata_mismatch(self, tmp_path, trial):
        path = tmp_path / "t.csv"
        write_trial_csv(trial, path)
        meta = dict(trial_meta(trial), tumor_color="white")
        with pytest.raises(FormatError, match="metadata"):
            read_trial_csv(path, meta, trial.trial_id)

    def test_dataset_directory(self, tmp_path):
        cfg = GeneratorConfig(n_skilled=2, n_novice=2, segment_duration_s=2.0, scenarios=(3,))
        writer = DatasetWriter(tmp_path)
        for idx, _, _ in cfg.participants():
            for tum in (3, 1, 2):
                writer.add(generate_trial(cfg, idx, 3, tum))
        writer.close()
        groups = list(iter_scenario_recordings(tmp_path))
        assert [(pid, sc) for pid, _, sc, _ in groups] == [(f"P00{k}", 3) for k in range(4)]
        assert all([s.tumor_id for s in segs] == [1, 2, 3] for _, _, _, segs in groups)

    def test_missing_sidecar(self, tmp_path):
        with pytest.raises(FormatError, match="sidecar"):
            list(iter_scenario_recordings(tmp_path))


class TestFeatureFiles:
    def matrix(self):
        rng = np.random.default_rng(0)
        return FeatureMatrix(rng.standard_normal((4, 68)) * 1e3, ["skilled", "novice"] * 2, ["a", "b", "c", "d"], [1, 1, 2, 2])

    def test_round_trip_is_exact(self, tmp_path):
        m = self.matrix()
        write_features_csv(m, tmp_path / "f.csv")
        back = read_features_csv(tmp_path / "f.csv")
        assert np.array_equal(back.values, m.values)
        assert back.trial_ids == m.trial_ids and list(back.scenario_ids) == [1, 1, 2, 2]

    def test_column_mismatch(self, tmp_path):
        write_features_csv(self.matrix(), tmp_path / "f.csv")
        text = (tmp_path / "f.csv").read_text().replace(",f17,", ",f17b,", 1)
        (tmp_path / "f.csv").write_text(text)
        with pytest.raises(FormatError, match=r":1: column mismatch; missing \['f17'\], unexpected \['f17b'\]"):
            read_features_csv(tmp_path / "f.csv")

    def test_bad_value_line(self, tmp_path):
        write_features_csv(self.matrix(), tmp_path / "f.csv")
        lines = (tmp_path / "f.csv").read_text().splitlines()
        lines[3] = lines[3].replace(lines[3].split(",")[5], "abc", 1)
        (tmp_path / "f.csv").write_text("\n".join(lines) + "\n")
        with pytest.raises(FormatError, match=r"f\.csv:4:"):
            read_features_csv(tmp_path / "f.csv")

    def test_header(self, tmp_path):
        write_features_csv(self.matrix(), tmp_path / "f.csv")
        header = (tmp_path / "f.csv").read_text().splitlines()[0].split(",")
        assert header[:3] == ["trial_id", "label", "scenario_id"] and tuple(header[3:]) == FEATURE_COLUMNS


def run(args):
    return cli.main([str(a) for a in args])


class TestCLI:
    def test_pipeline_end_to_end(self, tmp_path):
        out = tmp_path / "run"
        gen = ["--n-skilled", "8", "--n-novice", "12", "--segment-duration", "6", "--scenarios", "1", "2"]
        assert run(["pipeline", "--out-dir", out, "--delta", "3", *gen, *SMALL_GRID]) == 0
        for sub in ("data", "features", "selection", "evaluation", "report"):
            assert len(list((out / sub).glob("manifest.json"))) == 1
        summary = json.loads((out / "evaluation" / "summary.json").read_text())
        assert summary["class_sizes"] == {"1": {"skilled": 8, "novice": 12}, "2": {"skilled": 8, "novice": 12}}
        assert summary["n_cells"] == 2 * 4 * 2
        table = (out / "report" / "table3.txt").read_text()
        assert "N=8" in table and "N=12" in table and "N=20" in table
        sel = json.loads((out / "selection" / "selection.json").read_text())
        assert set(sel["scenarios"]) == {"1", "2"}

    def test_rerun_reproduces_bytes(self, tmp_path):
        data, feats, ev = tmp_path / "data", tmp_path / "feat" / "f.csv", tmp_path / "ev"
        assert run(["generate", "--out-dir", data, "--seed", "7", *SMALL_GEN]) == 0
        assert run(["extract", "--in-dir", data, "--out", feats]) == 0
        assert run(["evaluate", "--features", feats, "--out-dir", ev, *SMALL_GRID]) == 0
        snapshot = {p: p.read_bytes() for d in (data, feats.parent, ev) for p in d.iterdir() if p.name != "manifest.json"}
        for d in (data, feats.parent, ev):
            assert run(["rerun", d / "manifest.json"]) == 0
        for p, content in snapshot.items():
            assert p.read_bytes() == content, p

    def test_manifest_contents(self, tmp_path):
        data = tmp_path / "data"
        run(["generate", "--out-dir", data, "--seed", "3", *SMALL_GEN])
        doc = json.loads((data / "manifest.json").read_text())
        assert doc["command"] == "generate" and doc["seed"] == 3
        assert doc["config"]["delta"] == 0.0 and doc["tool_version"]
        assert doc["wall_time_s"] >= 0

    def test_null_delta_summary_near_chance(self, tmp_path):
        data, feats, ev = tmp_path / "data", tmp_path / "f.csv", tmp_path / "ev"
        run(["generate", "--out-dir", data, "--delta", "0", "--seed", "7", "--n-skilled", "10", "--n-novice", "20",
             "--segment-duration", "5", "--scenarios", "1"])
        run(["extract", "--in-dir", data, "--out", feats])
        assert run(["evaluate", "--features", feats, "--out-dir", ev, "--train-fractions", "0.5",
                    "--feature-counts", "5", "--iterations", "10", "--working-point", "0.5", "5"]) == 0
        summary = json.loads((ev / "summary.json").read_text())
        means = [v for v in summary["overall_mean_eer"].values() if v is not None]
        assert means and 0.3 <= np.mean(means) <= 0.7

    def test_failing_stage_is_named(self, tmp_path, capsys):
        assert run(["extract", "--in-dir", tmp_path / "nowhere", "--out", tmp_path / "f.csv"]) != 0
        assert "error in extract" in capsys.readouterr().err
        bad = tmp_path / "bad.csv"
        bad.write_text("trial_id,label\n")
        assert run(["evaluate", "--features", bad, "--out-dir", tmp_path / "ev"]) != 0
        assert "column mismatch" in capsys.readouterr().err

    def test_report_needs_class_sizes(self, tmp_path, capsys):
        csv = tmp_path / "r.csv"
        csv.write_text("scenario,classifier,train_frac,n_features,iteration,eer,sensitivity,specificity,threshold\n"
                       "1,knn,0.5,15,0,0,1,1,0.5\n")
        assert run(["report", "--report", csv, "--out-dir", tmp_path / "rep"]) != 0
        assert "error in report" in capsys.readouterr().err
        assert run(["report", "--report", csv, "--out-dir", tmp_path / "rep", "--n-skilled", "23", "--n-novice", "92"]) == 0
        assert "N=115" in (tmp_path / "rep" / "table3.txt").read_text()

    def test_catalog(self, tmp_path):
        assert run(["catalog", "--out", tmp_path / "c.md"]) == 0
        assert (tmp_path / "c.md").read_text().count("\n") == 70

    def test_usage_error(self):
        with pytest.raises(SystemExit):
            run(["evaluate"])
