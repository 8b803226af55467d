import json

import pytest

from tadrefine.cli import (
    CONFIG_ENV_VAR,
    EXIT_MISSING_FILE,
    EXIT_OK,
    EXIT_UNITS,
    EXIT_VALIDATION,
    main,
)


@pytest.fixture()
def sim_dir(tmp_path):
    scenario = {
        "num_videos": 12,
        "duration_range_sec": [60.0, 120.0],
        "instances_per_video": [1, 2],
        "snippet_counts": [25],
        "curve_sigma": 2.0,
        "noise_std": 0.0,
        "seed": 3,
    }
    scenario_path = tmp_path / "scenario.json"
    scenario_path.write_text(json.dumps(scenario))
    out = tmp_path / "sim"
    assert main(["simulate", "--scenario", str(scenario_path), "--out-dir", str(out)]) == EXIT_OK
    return out


class TestSimulate:
    def test_writes_dump_and_annotations(self, sim_dir):
        assert (sim_dir / "dump_T25.json").exists()
        assert (sim_dir / "annotations.json").exists()
        raw = json.loads((sim_dir / "dump_T25.json").read_text())
        assert raw["units"] == "snippet"
        assert len(raw["results"]) == 12

    def test_deterministic_output(self, sim_dir, tmp_path):
        scenario_path = tmp_path / "scenario.json"
        out2 = tmp_path / "sim2"
        assert main(["simulate", "--scenario", str(scenario_path), "--out-dir", str(out2)]) == EXIT_OK
        assert (sim_dir / "dump_T25.json").read_bytes() == (out2 / "dump_T25.json").read_bytes()


class TestRefine:
    def test_refine_then_eval_reaches_full_map(self, sim_dir, tmp_path, capsys):
        refined = tmp_path / "refined.json"
        rc = main(["refine", "--dump", str(sim_dir / "dump_T25.json"), "--out", str(refined)])
        assert rc == EXIT_OK
        assert json.loads(refined.read_text())["units"] == "second"

        report_path = tmp_path / "report.json"
        rc = main([
            "eval", "--dump", str(refined), "--annotations", str(sim_dir / "annotations.json"),
            "--benchmark", "anet", "--out", str(report_path),
        ])
        assert rc == EXIT_OK
        report = json.loads(report_path.read_text())
        assert report["average_map"] == 1.0
        assert all(v == 1.0 for v in report["per_threshold_map"].values())

    def test_dump_without_curves_passes_through(self, tmp_path):
        dump = {
            "version": "1.0",
            "units": "snippet",
            "results": {
                "v": {
                    "duration_sec": 50.0,
                    "num_snippets": 10,
                    "proposals": [{"start": 2.0, "end": 7.0, "score": 0.5, "label": "a"}],
                }
            },
        }
        src = tmp_path / "in.json"
        src.write_text(json.dumps(dump))
        out = tmp_path / "out.json"
        assert main(["refine", "--dump", str(src), "--out", str(out)]) == EXIT_OK
        raw = json.loads(out.read_text())
        prop = raw["results"]["v"]["proposals"][0]
        # intervals unchanged, now expressed in seconds
        assert prop["start"] == pytest.approx(10.0, abs=1e-6)
        assert prop["end"] == pytest.approx(35.0, abs=1e-6)

    def test_jobs_flag_gives_identical_values(self, sim_dir, tmp_path):
        serial = tmp_path / "serial.json"
        parallel = tmp_path / "parallel.json"
        assert main(["refine", "--dump", str(sim_dir / "dump_T25.json"), "--out", str(serial)]) == EXIT_OK
        assert main([
            "refine", "--dump", str(sim_dir / "dump_T25.json"), "--out", str(parallel), "--jobs", "3",
        ]) == EXIT_OK
        assert json.loads(serial.read_text()) == json.loads(parallel.read_text())

    def test_single_job_runs_are_byte_identical(self, sim_dir, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        args = ["refine", "--dump", str(sim_dir / "dump_T25.json"), "--sigma", "1.5"]
        assert main(args + ["--out", str(a), "--jobs", "1"]) == EXIT_OK
        assert main(args + ["--out", str(b), "--jobs", "1"]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_env_config_sets_defaults(self, sim_dir, tmp_path, monkeypatch):
        cfg_path = tmp_path / "defaults.json"
        cfg_path.write_text(json.dumps({"smoothing_enabled": False, "snap_window": 1}))
        monkeypatch.setenv(CONFIG_ENV_VAR, str(cfg_path))
        with_env = tmp_path / "with_env.json"
        assert main(["refine", "--dump", str(sim_dir / "dump_T25.json"), "--out", str(with_env)]) == EXIT_OK
        monkeypatch.delenv(CONFIG_ENV_VAR)
        explicit = tmp_path / "explicit.json"
        assert main([
            "refine", "--dump", str(sim_dir / "dump_T25.json"), "--out", str(explicit),
            "--no-smoothing", "--snap-window", "1",
        ]) == EXIT_OK
        assert with_env.read_bytes() == explicit.read_bytes()

    def test_bad_env_config_key_fails_validation(self, sim_dir, tmp_path, monkeypatch):
        cfg_path = tmp_path / "defaults.json"
        cfg_path.write_text(json.dumps({"sigmaa": 2.0}))
        monkeypatch.setenv(CONFIG_ENV_VAR, str(cfg_path))
        out = tmp_path / "out.json"
        rc = main(["refine", "--dump", str(sim_dir / "dump_T25.json"), "--out", str(out)])
        assert rc == EXIT_VALIDATION


class TestEval:
    def test_thumos_threshold_columns(self, sim_dir, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        rc = main([
            "eval", "--dump", str(sim_dir / "dump_T25.json"),
            "--annotations", str(sim_dir / "annotations.json"),
            "--benchmark", "thumos", "--out", str(report_path),
        ])
        assert rc == EXIT_OK
        header = capsys.readouterr().out.splitlines()[0]
        for col in ("0.30", "0.40", "0.50", "0.60", "0.70"):
            assert col in header
        report = json.loads(report_path.read_text())
        assert report["thresholds"] == [0.3, 0.4, 0.5, 0.6, 0.7]
        assert report["boundary_mae_sec"] is not None


class TestProfile:
    def test_profile_output(self, sim_dir, tmp_path):
        out = tmp_path / "profile.json"
        rc = main([
            "profile", "--dump", str(sim_dir / "dump_T25.json"),
            "--annotations", str(sim_dir / "annotations.json"),
            "--budgets", "1,2,3", "--out", str(out),
        ])
        assert rc == EXIT_OK
        profile = json.loads(out.read_text())
        assert [row["multiple"] for row in profile["budgets"]] == [1, 2, 3]
        assert "length_buckets" in profile

    def test_bad_budget_string(self, sim_dir, tmp_path):
        rc = main([
            "profile", "--dump", str(sim_dir / "dump_T25.json"),
            "--annotations", str(sim_dir / "annotations.json"),
            "--budgets", "1,chunky", "--out", str(tmp_path / "p.json"),
        ])
        assert rc == EXIT_VALIDATION


class TestGtCalibrate:
    def test_targets_written(self, sim_dir, tmp_path):
        out = tmp_path / "targets.json"
        rc = main([
            "gt-calibrate", "--annotations", str(sim_dir / "annotations.json"),
            "--num-snippets", "25", "--sigma", "2.0", "--mode", "floor",
            "--calibrated", "on", "--out", str(out),
        ])
        assert rc == EXIT_OK
        targets = json.loads(out.read_text())
        entry = next(iter(targets.values()))
        assert entry["num_snippets"] == 25
        inst = entry["instances"][0]
        assert len(inst["start_values"]) == 25
        assert max(inst["start_values"]) <= 1.0

    def test_calibrated_off_quantizes_centers(self, sim_dir, tmp_path):
        out = tmp_path / "targets.json"
        main([
            "gt-calibrate", "--annotations", str(sim_dir / "annotations.json"),
            "--num-snippets", "25", "--sigma", "2.0", "--mode", "floor",
            "--calibrated", "off", "--out", str(out),
        ])
        targets = json.loads(out.read_text())
        for entry in targets.values():
            for inst in entry["instances"]:
                assert inst["start_center"] == int(inst["start_center"])
                assert inst["end_center"] == int(inst["end_center"])


class TestExitCodes:
    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["refine", "--dump", "x", "--out", "y", "--frobnicate"])
        assert exc.value.code == 2

    def test_missing_file(self, tmp_path):
        rc = main(["refine", "--dump", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o.json")])
        assert rc == EXIT_MISSING_FILE

    def test_validation_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"version": "1.0", "results": {}}))  # units missing
        rc = main(["refine", "--dump", str(bad), "--out", str(tmp_path / "o.json")])
        assert rc == EXIT_VALIDATION

    def test_unit_mismatch(self, tmp_path):
        payload = {
            "version": "1.0",
            "units": "snippet",
            "results": {
                "v": {
                    "duration_sec": 10.0,
                    "num_snippets": 5,
                    "proposals": [{"start": 2.0, "end": 9.0, "score": 0.5, "label": "a"}],
                }
            },
        }
        bad = tmp_path / "bad_units.json"
        bad.write_text(json.dumps(payload))
        rc = main(["refine", "--dump", str(bad), "--out", str(tmp_path / "o.json")])
        assert rc == EXIT_UNITS

    def test_no_partial_output_on_failure(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"version": "1.0", "results": {}}))
        out = tmp_path / "never_written.json"
        assert main(["refine", "--dump", str(bad), "--out", str(out)]) == EXIT_VALIDATION
        assert not out.exists()

    def test_exit_codes_documented_in_help(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        text = capsys.readouterr().out
        assert "exit codes" in text
        for code in ("2", "3", "4", "5"):
            assert code in text
        assert CONFIG_ENV_VAR in text
