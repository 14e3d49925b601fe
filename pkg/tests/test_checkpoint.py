"""
Tests for checkpoint save/load and resumable training
"""

import csv

import pytest
import torch

from cmgan.exceptions import CheckpointError, CheckpointVersionError
from cmgan.models.network import GeneratorConfig
from cmgan.nn.discriminator import Discriminator
from cmgan.nn.generator import Generator
from cmgan.services.checkpoint import (
    FORMAT_VERSION,
    discriminator_from,
    generator_from,
    load_checkpoint,
    save_checkpoint,
)
from cmgan.services.trainer import LAST_CHECKPOINT, LOG_NAME

from .test_trainer import toy_trainer, toy_tracks

LOSSES = ("tf_loss", "gan_loss", "time_loss", "gen_loss", "disc_loss")


def assert_same_state(left, right):
    assert left.keys() == right.keys()
    for name in left:
        assert torch.equal(left[name], right[name]), name


def read_log(path):
    with open(path, newline="") as handle:
        rows = list(csv.DictReader(handle))
    for row in rows:
        row.pop("wall_time")
    return rows


class TestContainer:
    def test_round_trip_is_bit_identical(self, tmp_path):
        torch.manual_seed(3)
        generator = Generator(GeneratorConfig(channels=8, num_blocks=1, heads=2))
        discriminator = Discriminator()
        path = save_checkpoint(tmp_path / "model.pt", generator, discriminator, epoch=4, step=40)

        payload = load_checkpoint(path)
        assert payload["format_version"] == FORMAT_VERSION
        assert payload["progress"] == {"epoch": 4, "batch_index": 0, "step": 40}
        assert_same_state(generator_from(payload).state_dict(), generator.state_dict())
        assert_same_state(discriminator_from(payload).state_dict(), discriminator.state_dict())
        assert generator_from(payload).cfg == generator.cfg

    def test_generator_only(self, tmp_path):
        generator = Generator(GeneratorConfig(channels=8, num_blocks=0, heads=2))
        payload = load_checkpoint(save_checkpoint(tmp_path / "g.pt", generator))
        assert discriminator_from(payload) is None

    def test_version_mismatch(self, tmp_path):
        generator = Generator(GeneratorConfig(channels=8, num_blocks=0, heads=2))
        path = save_checkpoint(tmp_path / "old.pt", generator)
        payload = torch.load(path, weights_only=True)
        payload["format_version"] = FORMAT_VERSION + 1
        torch.save(payload, path)
        with pytest.raises(CheckpointVersionError):
            load_checkpoint(path)

    def test_missing_and_garbage_files(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "nope.pt")
        garbage = tmp_path / "garbage.pt"
        garbage.write_bytes(b"not a checkpoint")
        with pytest.raises(CheckpointError):
            load_checkpoint(garbage)
        plain = tmp_path / "plain.pt"
        torch.save({"weights": torch.zeros(2)}, plain)
        with pytest.raises(CheckpointError):
            load_checkpoint(plain)


class TestResume:
    def test_resume_mid_epoch_matches_uninterrupted_run(self, tmp_path):
        tracks = toy_tracks(3)
        straight = toy_trainer(run_dir=tmp_path / "straight", epochs=2).fit(tracks)
        assert len(straight) == 4

        interrupted = toy_trainer(run_dir=tmp_path / "interrupted", epochs=2)
        interrupted.fit(tracks, max_steps=3)

        resumed = toy_trainer(run_dir=tmp_path / "resumed", epochs=2)
        resumed.restore(tmp_path / "interrupted" / LAST_CHECKPOINT)
        assert (resumed.epoch, resumed.batch_index, resumed.step) == (1, 1, 3)
        rest = resumed.fit(tracks)

        assert len(rest) == 1
        assert rest[0].step == straight[3].step
        for name in LOSSES:
            assert getattr(rest[0], name) == pytest.approx(getattr(straight[3], name), rel=1e-6, abs=1e-9)

    def test_identical_runs_give_identical_logs_and_weights(self, tmp_path):
        tracks = toy_tracks(3)
        for name in ("a", "b"):
            toy_trainer(run_dir=tmp_path / name, epochs=2).fit(tracks)

        rows_a, rows_b = read_log(tmp_path / "a" / LOG_NAME), read_log(tmp_path / "b" / LOG_NAME)
        assert len(rows_a) == len(rows_b) == 4
        for row_a, row_b in zip(rows_a, rows_b):
            for key in row_a:
                assert float(row_a[key]) == pytest.approx(float(row_b[key]), rel=1e-6, abs=1e-12), key

        first = load_checkpoint(tmp_path / "a" / LAST_CHECKPOINT)
        second = load_checkpoint(tmp_path / "b" / LAST_CHECKPOINT)
        assert_same_state(first["generator"]["state"], second["generator"]["state"])
        assert_same_state(first["discriminator"]["state"], second["discriminator"]["state"])
        assert first["progress"] == second["progress"]
        assert torch.equal(first["rng"], second["rng"])
