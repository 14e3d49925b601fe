"""
End-to-end tests for the command-line interface

Each test calls cmgan.main.main with an argv list and reads stdout via capsys.
"""

import csv
import io
from pathlib import Path

import pytest
from pydantic import ValidationError

from cmgan.config import load_settings
from cmgan.main import main
from cmgan.models.audio import ManifestEntry, Task
from cmgan.services.audio_io import load_manifest, write_manifest
from cmgan.services.checkpoint import load_checkpoint


def stdout_lines(capsys):
    return [line for line in capsys.readouterr().out.splitlines() if line.strip()]


@pytest.fixture
def degraded(tmp_path, clean_dir, capsys) -> Path:
    """A denoise dataset built through the CLI; returns the manifest path"""
    code = main(["degrade", "--clean-dir", str(clean_dir), "--out", str(tmp_path / "data"), "--seed", "5", "--snr", "5"])
    assert code == 0
    (printed,) = stdout_lines(capsys)
    return Path(printed)


@pytest.fixture
def toy_config(tmp_path) -> Path:
    path = tmp_path / "toy.env"
    path.write_text("CMGAN_SLICE_SECONDS=0.5\nCMGAN_CHANNELS=8\nCMGAN_BLOCKS=1\n")
    return path


class TestDegrade:
    def test_writes_manifest(self, degraded):
        entries = load_manifest(degraded)
        assert len(entries) == 3
        assert all(entry.meta["snr_db"] == "5" for entry in entries)
        assert all(entry.degraded_path.is_file() for entry in entries)

    def test_missing_clean_dir(self, tmp_path):
        assert main(["degrade", "--clean-dir", str(tmp_path / "nothing"), "--out", str(tmp_path / "out")]) != 0

    def test_reverb_noise_snr_flag(self, tmp_path, clean_dir, capsys):
        out = tmp_path / "reverb"
        argv = ["degrade", "--clean-dir", str(clean_dir), "--out", str(out), "--task", "dereverb",
                "--t60", "0.3,0.5", "--reverb-noise-snr", "10"]
        assert main(argv) == 0
        (printed,) = stdout_lines(capsys)
        entries = load_manifest(Path(printed))
        assert all(entry.task == Task.DEREVERB for entry in entries)
        assert all(entry.meta["snr_db"] == "10" and entry.meta["noise"] == "white" for entry in entries)


class TestEvaluate:
    @pytest.fixture
    def identity_manifest(self, tmp_path, clean_files):
        entries = [ManifestEntry(clean_path=p, degraded_path=p, task=Task.DENOISE) for p in clean_files]
        return write_manifest(entries, tmp_path / "identity.jsonl")

    def test_clean_against_itself(self, identity_manifest, capsys):
        assert main(["evaluate", "--manifest", str(identity_manifest), "--metrics", "lsd_10,snr"]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [row["track"] for row in rows] == ["utt0", "utt1", "utt2", "mean"]
        assert all(float(row["lsd_10"]) == 0.0 for row in rows)
        assert all(float(row["snr"]) == 100.0 for row in rows)

    def test_csv_file_output(self, identity_manifest, tmp_path, capsys):
        out = tmp_path / "scores.csv"
        assert main(["evaluate", "--manifest", str(identity_manifest), "--metrics", "ssnr", "--out", str(out)]) == 0
        assert stdout_lines(capsys) == [str(out)]
        assert out.read_text().splitlines()[0] == "track,ssnr"

    def test_unknown_metric(self, identity_manifest):
        assert main(["evaluate", "--manifest", str(identity_manifest), "--metrics", "snr,mos"]) == 1

    def test_bad_manifest(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{not json\n")
        assert main(["evaluate", "--manifest", str(bad)]) == 1


class TestTrainAndEnhance:
    def test_toy_run_resume_and_enhance(self, degraded, toy_config, tmp_path, capsys):
        run_dir = tmp_path / "run"
        common = ["--manifest", str(degraded), "--config", str(toy_config), "--run-dir", str(run_dir),
                  "--quality", "llr", "--batch", "2", "--epochs", "2"]

        assert main(["train", *common, "--max-steps", "1"]) == 0
        (checkpoint,) = stdout_lines(capsys)
        assert Path(checkpoint) == run_dir / "last.pt"
        assert load_checkpoint(checkpoint)["progress"]["step"] == 1

        assert main(["train", *common, "--resume", checkpoint, "--max-steps", "2"]) == 0
        stdout_lines(capsys)
        assert load_checkpoint(checkpoint)["progress"]["step"] == 2
        assert len((run_dir / "train_log.csv").read_text().splitlines()) == 1 + 2

        noisy = load_manifest(degraded)[0].degraded_path
        assert main(["enhance", "--checkpoint", checkpoint, "--input", str(noisy), "--out", str(tmp_path / "enh")]) == 0
        assert stdout_lines(capsys) == [str(tmp_path / "enh" / noisy.name)]

    def test_pesq_without_provider(self, degraded, tmp_path):
        assert main(["train", "--manifest", str(degraded), "--quality", "pesq", "--run-dir", str(tmp_path / "r")]) == 1

    def test_enhance_needs_an_input(self, tmp_path):
        assert main(["enhance", "--checkpoint", str(tmp_path / "x.pt"), "--out", str(tmp_path)]) == 1

    def test_manifest_task_must_match(self, degraded, tmp_path):
        argv = ["train", "--manifest", str(degraded), "--task", "dereverb", "--quality", "llr",
                "--run-dir", str(tmp_path / "r")]
        assert main(argv) == 1
        assert not (tmp_path / "r").exists()


class TestSelfcheckCommand:
    def test_injected_fault_fails(self, capsys):
        assert main(["selfcheck", "--inject-fault", "--trials", "1", "--pairs", "1"]) == 1
        lines = stdout_lines(capsys)
        assert "[FAIL] gradients/conv_block" in "\n".join(lines)


class TestUsage:
    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["train"])
        assert excinfo.value.code == 2

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["transcode"])
        assert excinfo.value.code == 2


class TestSettings:
    def test_absent_flags_keep_file_values(self, toy_config):
        settings = load_settings(toy_config, channels=None, blocks=4)
        assert settings.channels == 8
        assert settings.blocks == 4

    def test_unknown_keys_are_rejected(self):
        with pytest.raises(ValidationError):
            load_settings(device="cuda")
