"""
Test Suite for WAV and Manifest I/O

Covers the PCM scaling contract, down-mixing, format refusal and the
manifest reader/writer (line numbers, relative paths, dangling entries).
"""

import json

import numpy as np
import pytest
import soundfile as sf

from cmgan.exceptions import AudioFormatError, ManifestError
from cmgan.models.audio import ManifestEntry, Task, Waveform
from cmgan.services.audio_io import PCM_SCALE, load_manifest, read_wav, write_manifest, write_wav


class TestWav:
    """read_wav / write_wav"""

    def test_round_trip_is_quantization_only(self, tmp_path, rng):
        w = Waveform(samples=rng.uniform(-0.9, 0.9, 1600), sample_rate=16000)
        back = read_wav(write_wav(w, tmp_path / "x.wav"))
        assert back.sample_rate == 16000
        assert len(back) == len(w)
        np.testing.assert_array_equal(back.samples, np.round(w.samples * PCM_SCALE) / PCM_SCALE)

    def test_pcm_values_scale_by_32768(self, tmp_path):
        pcm = np.array([0, 16384, -32768, 32767], dtype=np.int16)
        sf.write(str(tmp_path / "p.wav"), pcm, 8000, subtype="PCM_16")
        w = read_wav(tmp_path / "p.wav")
        np.testing.assert_array_equal(w.samples, [0.0, 0.5, -1.0, 32767 / 32768])

    def test_write_clips_out_of_range(self, tmp_path):
        w = Waveform(samples=[1.5, -2.0, 0.25], sample_rate=16000)
        back = read_wav(write_wav(w, tmp_path / "c.wav"))
        np.testing.assert_array_equal(back.samples, [32767 / 32768, -1.0, 0.25])

    def test_stereo_is_averaged(self, tmp_path):
        frames = np.array([[1000, 3000], [-2000, 0]], dtype=np.int16)
        sf.write(str(tmp_path / "s.wav"), frames, 16000, subtype="PCM_16")
        w = read_wav(tmp_path / "s.wav")
        np.testing.assert_allclose(w.samples, [2000 / PCM_SCALE, -1000 / PCM_SCALE])

    def test_float_wav_is_refused(self, tmp_path):
        sf.write(str(tmp_path / "f.wav"), np.zeros(100, dtype=np.float32), 16000, subtype="FLOAT")
        with pytest.raises(AudioFormatError, match="16-bit PCM"):
            read_wav(tmp_path / "f.wav")

    def test_missing_file(self, tmp_path):
        with pytest.raises(AudioFormatError, match="not found"):
            read_wav(tmp_path / "nope.wav")

    def test_garbage_file(self, tmp_path):
        (tmp_path / "g.wav").write_bytes(b"not a wav at all")
        with pytest.raises(AudioFormatError):
            read_wav(tmp_path / "g.wav")

    def test_write_leaves_no_temp_files(self, tmp_path):
        write_wav(Waveform(samples=[0.1] * 10, sample_rate=16000), tmp_path / "out" / "a.wav")
        assert [p.name for p in (tmp_path / "out").iterdir()] == ["a.wav"]


class TestManifest:
    """load_manifest / write_manifest"""

    @pytest.fixture
    def pair(self, tmp_path):
        w = Waveform(samples=[0.1, -0.1, 0.2], sample_rate=16000)
        return write_wav(w, tmp_path / "clean" / "a.wav"), write_wav(w, tmp_path / "degraded" / "a.wav")

    def test_relative_paths_resolve_against_manifest_dir(self, tmp_path, pair):
        record = {"clean_path": "clean/a.wav", "degraded_path": "degraded/a.wav", "task": "denoise", "meta": {"snr_db": "5"}}
        (tmp_path / "m.jsonl").write_text(json.dumps(record) + "\n\n")
        entries = load_manifest(tmp_path / "m.jsonl")
        assert len(entries) == 1
        assert entries[0].clean_path == tmp_path / "clean" / "a.wav"
        assert entries[0].task == Task.DENOISE
        assert entries[0].meta == {"snr_db": "5"}
        assert entries[0].track_id == "a"

    def test_malformed_line_reports_line_number(self, tmp_path, pair):
        good = {"clean_path": "clean/a.wav", "degraded_path": "degraded/a.wav", "task": "denoise"}
        (tmp_path / "m.jsonl").write_text(json.dumps(good) + "\n{broken\n")
        with pytest.raises(ManifestError) as info:
            load_manifest(tmp_path / "m.jsonl")
        assert info.value.line_number == 2

    def test_unknown_task_is_malformed(self, tmp_path, pair):
        bad = {"clean_path": "clean/a.wav", "degraded_path": "degraded/a.wav", "task": "karaoke"}
        (tmp_path / "m.jsonl").write_text(json.dumps(bad) + "\n")
        with pytest.raises(ManifestError, match="line 1"):
            load_manifest(tmp_path / "m.jsonl")

    def test_dangling_path_strict_and_lenient(self, tmp_path, pair):
        records = [
            {"clean_path": "clean/a.wav", "degraded_path": "degraded/a.wav", "task": "dereverb"},
            {"clean_path": "clean/zzz.wav", "degraded_path": "degraded/a.wav", "task": "dereverb"},
        ]
        (tmp_path / "m.jsonl").write_text("".join(json.dumps(r) + "\n" for r in records))
        with pytest.raises(ManifestError) as info:
            load_manifest(tmp_path / "m.jsonl")
        assert info.value.line_number == 2
        assert len(load_manifest(tmp_path / "m.jsonl", strict=False)) == 1

    def test_write_then_load(self, tmp_path, pair):
        clean, degraded = pair
        entries = [ManifestEntry(clean_path=clean, degraded_path=degraded, task=Task.SUPERRES, meta={"scale": "4"})]
        path = write_manifest(entries, tmp_path / "m.jsonl")
        record = json.loads(path.read_text().splitlines()[0])
        assert record["clean_path"] == "clean/a.wav"
        assert list(record) == sorted(record)
        loaded = load_manifest(path)
        assert loaded[0].clean_path.resolve() == clean.resolve()
        assert loaded[0].meta == {"scale": "4"}
