import os
import json

import pytest

from System.CommandLine import main, EXIT_SUCCESS, EXIT_FAILURE, EXIT_INVALID_CONFIG, EXIT_INCOMPLETE
from System.Datastore import OutputStore, IntegrityError, file_checksum, format_value, csv_text
from System.RunManifest import RunManifest, run_id_for, MANIFEST_FILE, FAILURE_FILE
from System.Validators import ManifestValidator
from System.Report import RunReport, RATES_SUMMARY, REPORT_FILE
from System.RunPipeline import experiment_class
from Modules.Experiments.Dephasing import Dephasing

CONFIG_HASH = "a" * 64

RATES_ROWS = [[0.5, 2.0, 0.1, 1.5, 2.4], [1.0, 3.0, 0.2, 2.5, 4.0]]


def finished_run(run_dir, seed=1, status_ok=True):
    # Output directory holding one rates table and its manifest
    store = OutputStore(str(run_dir))
    store.prepare()
    store.write_csv("rates", "rates", "rates.csv", ["theta_pi", "gamma_m", "gamma_m_stderr", "gamma_het",
                                                    "gamma_d_bound"], RATES_ROWS)
    store.finalize()
    manifest = RunManifest(run_id_for("rates", CONFIG_HASH), CONFIG_HASH, seed, "rates", "magnus")
    for output_file in store.get_files():
        manifest.register_output_file(output_file.stage, output_file.get_type(), store.relative_path(output_file),
                                      output_file.get_size(), output_file.get_checksum())
    if not status_ok:
        manifest.set_fail("interrupted")
    return manifest.write(store.output_dir)


def write_config(path, text):
    with open(path, "w") as fh:
        fh.write(text)
    return str(path)


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(0.1) == "0.1"
    assert format_value(None) == ""
    assert csv_text(["a", "b"], [[1, False]]) == "a,b\n1,false\n"


def test_output_store_declares_each_file_once(tmp_path):
    store = OutputStore(str(tmp_path / "out"))
    store.prepare()
    output_file = store.write_csv("stage", "table", "table.csv", ["x"], [[1.5]])
    with pytest.raises(RuntimeError):
        store.declare("stage", "table", "table.csv")
    store.declare("stage", "missing", "missing.csv")
    with pytest.raises(IOError):
        store.finalize()
    assert output_file.get_checksum() == file_checksum(output_file.get_path())


def test_output_file_verification(tmp_path):
    store = OutputStore(str(tmp_path))
    output_file = store.write_csv("stage", "table", "table.csv", ["x"], [[1]])
    store.finalize()
    assert output_file.verify()
    with open(output_file.get_path(), "a") as fh:
        fh.write("2\n")
    with pytest.raises(IntegrityError):
        output_file.verify()


def test_manifest_and_failure_report(tmp_path):
    manifest = RunManifest("rates-abc", CONFIG_HASH, 3, "rates", "magnus")
    manifest.set_start_time(100.0)
    manifest.register_stage("rates", 101.5, 2.0)
    manifest.set_summary({"gamma": 1.0})
    path = manifest.write(str(tmp_path))
    assert os.path.basename(path) == MANIFEST_FILE
    with open(path) as fh:
        written = json.load(fh)
    assert written["status"] == "Complete"
    assert written["timings"][0]["start_time"] == 1.5
    assert written["total_proc_time"] == 2.0
    assert written["summary"] == {"gamma": 1.0}

    manifest.set_fail("boom")
    assert os.path.basename(manifest.write(str(tmp_path))) == FAILURE_FILE
    assert not [name for name in os.listdir(str(tmp_path)) if name.startswith(".")]


def test_manifest_validator(tmp_path):
    path = finished_run(tmp_path / "run")
    validator = ManifestValidator(path)
    assert not validator.validate()
    assert validator.is_complete()

    with open(os.path.join(str(tmp_path / "run"), "rates.csv"), "a") as fh:
        fh.write("0,0,0,0,0\n")
    tampered = ManifestValidator(path)
    assert tampered.validate()
    assert len(tampered.integrity_failures) == 1


def test_manifest_validator_rejects_bad_schema(tmp_path):
    path = str(tmp_path / MANIFEST_FILE)
    with open(path, "w") as fh:
        json.dump({"run_id": "x", "status": "Complete"}, fh)
    validator = ManifestValidator(path)
    assert validator.validate()
    assert validator.integrity_failures == []


def test_failed_run_is_incomplete(tmp_path):
    run_dir = tmp_path / "run"
    finished_run(run_dir, status_ok=False)
    report = RunReport([str(run_dir)], str(tmp_path / "report"))
    report.load()
    assert not report.is_complete()
    assert str(run_dir) in report.incomplete


def test_report_aggregates_rates(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    finished_run(first, seed=1)
    finished_run(second, seed=2)
    report = RunReport([str(first), os.path.join(str(second), MANIFEST_FILE)], str(tmp_path / "report"))
    report.load()
    report.aggregate()
    files = report.write()
    assert report.is_complete()
    assert len(report.rates) == 4
    assert report.rates[0][1:] == RATES_ROWS[0]
    assert {output_file.filename for output_file in files} == {RATES_SUMMARY, "acceptance_summary.csv", REPORT_FILE}
    with open(os.path.join(str(tmp_path / "report"), REPORT_FILE)) as fh:
        assert [run["master_seed"] for run in json.load(fh)["runs"]] == [1, 2]


def test_report_raises_on_tampered_outputs(tmp_path):
    run_dir = tmp_path / "run"
    finished_run(run_dir)
    os.remove(os.path.join(str(run_dir), "rates.csv"))
    with pytest.raises(IntegrityError):
        RunReport([str(run_dir)], str(tmp_path / "report")).load()


def test_experiment_lookup():
    assert experiment_class("dephasing") is Dephasing
    assert experiment_class("acceptance").__name__ == "Acceptance"
    with pytest.raises(ValueError):
        experiment_class("teleportation")


def test_cli_validate(tmp_path, capsys):
    path = write_config(tmp_path / "run.config", "master_seed = 3\npreset = fast\n")
    assert main(["validate", "--config", path]) == EXIT_SUCCESS
    assert "master_seed = 3" in capsys.readouterr().out
    assert main(["validate", "--config", path, "--workers", "0"]) == EXIT_INVALID_CONFIG


def test_cli_validate_paper_preset(tmp_path, capsys):
    path = write_config(tmp_path / "run.config", "master_seed = 3\n")
    assert main(["validate", "--config", path, "--preset", "paper"]) == EXIT_SUCCESS
    assert "preset = paper" in capsys.readouterr().out
    assert main(["validate", "--config", path, "--preset", "device"]) == EXIT_INVALID_CONFIG


def test_cli_run_with_invalid_config(tmp_path):
    path = write_config(tmp_path / "run.config", "preset = fast\noutput_dir = %s\n" % (tmp_path / "out"))
    assert main(["run", "--config", path]) == EXIT_INVALID_CONFIG
    assert not os.path.exists(str(tmp_path / "out"))


def test_cli_report(tmp_path):
    finished_run(tmp_path / "run")
    report_dir = str(tmp_path / "report")
    assert main(["report", str(tmp_path / "run"), "--output_dir", report_dir]) == EXIT_SUCCESS
    assert main(["report", str(tmp_path / "run"), str(tmp_path / "missing"), "--output_dir",
                 str(tmp_path / "report2")]) == EXIT_INCOMPLETE
    os.remove(os.path.join(str(tmp_path / "run"), "rates.csv"))
    assert main(["report", str(tmp_path / "run"), "--output_dir", str(tmp_path / "report3")]) == EXIT_INCOMPLETE


DEPHASING_CONFIG = """master_seed = 5
preset = fast
experiment = dephasing
output_dir = %s

[dephasing]
thetas_pi = 0.5,
periods = 3
steps_per_period = 42
use_wigner = False
"""


@pytest.mark.slow
def test_dephasing_run_is_reproducible(tmp_path):
    outputs = []
    for name in ["first", "second"]:
        output_dir = tmp_path / name
        path = write_config(tmp_path / ("%s.config" % name), DEPHASING_CONFIG % output_dir)
        assert main(["run", "--config", path]) == EXIT_SUCCESS
        with open(os.path.join(str(output_dir), MANIFEST_FILE)) as fh:
            manifest = json.load(fh)
        assert manifest["status"] == "Complete"
        assert manifest["experiment"] == "dephasing"
        checksums = {entry["path"]: entry["sha256"] for entry in manifest["files"]}
        assert set(checksums) == {"config.config", "dephasing.csv"}
        outputs.append(checksums["dephasing.csv"])
        assert not ManifestValidator(os.path.join(str(output_dir), MANIFEST_FILE)).validate()
    assert outputs[0] == outputs[1]


def test_run_failure_writes_failure_report(tmp_path, monkeypatch):
    def broken(self):
        raise RuntimeError("integrator diverged")

    monkeypatch.setattr(Dephasing, "execute", broken)
    output_dir = tmp_path / "out"
    path = write_config(tmp_path / "run.config", DEPHASING_CONFIG % output_dir)
    assert main(["run", "--config", path]) == EXIT_FAILURE
    assert not os.path.exists(os.path.join(str(output_dir), MANIFEST_FILE))
    with open(os.path.join(str(output_dir), FAILURE_FILE)) as fh:
        failure = json.load(fh)
    assert failure["status"] == "Failed"
    assert "integrator diverged" in failure["error"]
