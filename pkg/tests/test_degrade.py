"""
Test Suite for Degradation Synthesis

Covers the three primitives (noise mixing, reverberation, band limiting),
the synthetic noise sources and the dataset builder's determinism.
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from cmgan.exceptions import AudioFormatError, ConfigError
from cmgan.models.audio import Task, Waveform
from cmgan.models.degrade import TEST_SNRS, TRAIN_SNRS, DegradeSpec
from cmgan.services import metrics
from cmgan.services.audio_io import load_manifest, read_wav, write_wav
from cmgan.services.degrade import (
    LN_1000,
    DatasetBuilder,
    build_dataset,
    convolve_rir,
    decay_envelope,
    estimate_t60,
    make_lowres,
    make_noise,
    mix_at_snr,
    synth_rir,
)

from .conftest import SAMPLE_RATE, harmonic_speech, tone


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x ** 2)))


class TestMixAtSnr:
    @pytest.mark.parametrize("snr_db", [0.0, 5.0, 10.0, 15.0])
    def test_hits_target_snr(self, speech, snr_db):
        noise = make_noise("white", len(speech), SAMPLE_RATE, seed=1)
        noisy = mix_at_snr(speech, noise, snr_db)
        assert metrics.snr(speech.samples, noisy.samples) == pytest.approx(snr_db, abs=0.01)

    def test_short_noise_is_looped(self, speech):
        noise = make_noise("pink", 1000, SAMPLE_RATE, seed=2)
        noisy = mix_at_snr(speech, noise, 5.0)
        assert len(noisy) == len(speech)
        residual = noisy.samples - speech.samples
        assert np.allclose(residual[:1000], residual[1000:2000])

    def test_rejects_bad_inputs(self, speech):
        silent = Waveform(samples=np.zeros(100), sample_rate=SAMPLE_RATE)
        noise = make_noise("white", 100, SAMPLE_RATE, seed=0)
        with pytest.raises(ConfigError):
            mix_at_snr(speech, silent, 5.0)
        with pytest.raises(ConfigError):
            mix_at_snr(speech, noise, float("inf"))
        with pytest.raises(ConfigError):
            mix_at_snr(speech, Waveform(samples=noise.samples, sample_rate=8000), 5.0)


class TestReverberation:
    def test_unit_impulse_is_identity(self, speech):
        out = convolve_rir(speech, Waveform(samples=np.array([1.0]), sample_rate=SAMPLE_RATE))
        np.testing.assert_allclose(out.samples, speech.samples, atol=1e-12)

    def test_delayed_impulse_shifts(self, speech):
        out = convolve_rir(speech, Waveform(samples=np.array([0.0, 0.0, 0.0, 1.0]), sample_rate=SAMPLE_RATE))
        assert len(out) == len(speech)
        np.testing.assert_allclose(out.samples[3:], speech.samples[:-3], atol=1e-12)
        np.testing.assert_allclose(out.samples[:3], 0.0, atol=1e-12)

    def test_output_peak_matches_input(self, speech):
        out = convolve_rir(speech, synth_rir(0.5, SAMPLE_RATE, seed=4))
        assert np.max(np.abs(out.samples)) == pytest.approx(np.max(np.abs(speech.samples)))

    def test_energy_envelope_halves_after_fifteen_ms(self):
        t60 = 0.3
        half_time = math.log(2.0) * t60 / (2.0 * LN_1000)
        assert half_time == pytest.approx(0.015, abs=1e-4)
        sample_rate = 1_000_000
        end = int(round(t60 * sample_rate))
        envelope = decay_envelope(t60, end + 1, sample_rate)
        assert envelope[int(round(half_time * sample_rate))] ** 2 == pytest.approx(0.5, abs=1e-4)
        assert envelope[end] == pytest.approx(1e-3, rel=1e-3)

    def test_synthetic_rir_layout(self):
        h = synth_rir(0.3, SAMPLE_RATE, seed=9)
        assert len(h) == 7200
        assert h.samples[0] == 1.0
        assert np.all(np.abs(h.samples[1:]) < 1.0)
        np.testing.assert_array_equal(h.samples, synth_rir(0.3, SAMPLE_RATE, seed=9).samples)
        assert not np.array_equal(h.samples, synth_rir(0.3, SAMPLE_RATE, seed=10).samples)

    @pytest.mark.parametrize("t60", [0.3, 0.5, 0.7])
    def test_t60_is_recovered(self, t60):
        estimate = estimate_t60(synth_rir(t60, SAMPLE_RATE, seed=int(t60 * 10)))
        assert estimate == pytest.approx(t60, rel=0.1)

    def test_t60_errors(self):
        with pytest.raises(ConfigError):
            synth_rir(0.0, SAMPLE_RATE, seed=0)
        with pytest.raises(ConfigError):
            estimate_t60(Waveform(samples=np.zeros(10), sample_rate=SAMPLE_RATE))
        with pytest.raises(ConfigError):
            estimate_t60(Waveform(samples=np.array([1.0]), sample_rate=SAMPLE_RATE))


class TestLowResolution:
    @pytest.mark.parametrize("s", [2, 4, 8])
    def test_stopband_attenuation(self, s):
        nyquist = SAMPLE_RATE / (2 * s)
        x = tone(1.5 * nyquist, seconds=1.0)
        y = make_lowres(x, s)
        interior = slice(2000, -2000)
        attenuation_db = 20.0 * math.log10(_rms(y.samples[interior]) / _rms(x.samples[interior]))
        assert attenuation_db <= -50.0

    @pytest.mark.parametrize("s", [2, 4, 8])
    def test_passband_keeps_length_and_level(self, s):
        x = tone(0.25 * SAMPLE_RATE / (2 * s), seconds=1.0)
        y = make_lowres(x, s)
        assert len(y) == len(x)
        assert y.sample_rate == SAMPLE_RATE
        interior = slice(2000, -2000)
        assert _rms(y.samples[interior]) == pytest.approx(_rms(x.samples[interior]), rel=0.01)

    @pytest.mark.parametrize("s", [2, 4, 8])
    def test_idempotent_on_band_limited_signals(self, s):
        once = make_lowres(tone(0.25 * SAMPLE_RATE / (2 * s), seconds=1.0), s)
        twice = make_lowres(once, s)
        interior = slice(2000, -2000)
        assert _rms(twice.samples[interior] - once.samples[interior]) < 1e-3

    def test_dc_is_preserved(self):
        x = Waveform(samples=np.full(SAMPLE_RATE, 0.25), sample_rate=SAMPLE_RATE)
        y = make_lowres(x, 4)
        np.testing.assert_allclose(y.samples[2000:-2000], 0.25, atol=1e-3)

    def test_invalid_scale(self, speech):
        with pytest.raises(ConfigError):
            make_lowres(speech, 1)
        with pytest.raises(ConfigError):
            make_lowres(speech, 3)


class TestNoiseSources:
    @pytest.mark.parametrize("kind", ["white", "pink", "babble", "doorbell"])
    def test_unit_rms_and_deterministic(self, kind):
        a = make_noise(kind, 8000, SAMPLE_RATE, seed=3)
        b = make_noise(kind, 8000, SAMPLE_RATE, seed=3)
        assert _rms(a.samples) == pytest.approx(1.0)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_pink_noise_tilts_down(self):
        noise = make_noise("pink", SAMPLE_RATE, SAMPLE_RATE, seed=0).samples
        power = np.abs(np.fft.rfft(noise)) ** 2
        freqs = np.fft.rfftfreq(noise.size, d=1.0 / SAMPLE_RATE)
        low = power[(freqs > 100) & (freqs < 500)].mean()
        high = power[(freqs > 4000) & (freqs < 8000)].mean()
        assert low > 5.0 * high

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            make_noise("traffic", 100, SAMPLE_RATE, seed=0)


class TestDegradeSpec:
    def test_split_snr_lists(self):
        assert DegradeSpec(task="denoise").snr_choices == TRAIN_SNRS
        assert DegradeSpec(task="denoise", split="test").snr_choices == TEST_SNRS
        assert DegradeSpec(task="denoise", snr_db=[3.0]).snr_choices == [3.0]

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"task": "superres", "scale": 3},
            {"task": "superres", "scale": 1},
            {"task": "dereverb", "t60_range": (0.7, 0.3)},
            {"task": "denoise", "noise_kinds": []},
            {"task": "denoise", "noise_kinds": ["traffic"]},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            DegradeSpec(**kwargs)


class TestDatasetBuilder:
    def test_denoise_dataset(self, clean_dir, tmp_path):
        manifest = build_dataset(clean_dir, DegradeSpec(task="denoise"), tmp_path / "out", seed=3)
        assert manifest == tmp_path / "out" / "manifest.jsonl"
        assert len(manifest.read_text().splitlines()) == 3

        entries = load_manifest(manifest)
        assert [e.track_id for e in entries] == ["utt0", "utt1", "utt2"]
        for entry in entries:
            assert entry.task == Task.DENOISE
            assert float(entry.meta["snr_db"]) in TRAIN_SNRS
            clean, degraded = read_wav(entry.clean_path), read_wav(entry.degraded_path)
            assert len(clean) == len(degraded)
            assert metrics.snr(clean.samples, degraded.samples) == pytest.approx(float(entry.meta["snr_db"]), abs=0.05)

    def test_same_seed_same_bytes(self, clean_dir, tmp_path):
        spec = DegradeSpec(task="denoise")
        first = build_dataset(clean_dir, spec, tmp_path / "a", seed=5)
        second = build_dataset(clean_dir, spec, tmp_path / "b", seed=5, num_workers=3)
        assert first.read_bytes() == second.read_bytes()
        for name in ("utt0.wav", "utt1.wav", "utt2.wav"):
            assert (tmp_path / "a" / "degraded" / name).read_bytes() == (tmp_path / "b" / "degraded" / name).read_bytes()

        other = build_dataset(clean_dir, spec, tmp_path / "c", seed=6)
        assert other.read_bytes() != first.read_bytes()

    def test_dereverb_and_superres(self, clean_dir, tmp_path):
        reverb = load_manifest(build_dataset(clean_dir, DegradeSpec(task="dereverb"), tmp_path / "r"))
        assert all(0.3 <= float(e.meta["t60"]) <= 0.7 for e in reverb)
        assert all(e.meta["rir_id"].startswith("synth-") for e in reverb)
        assert "snr_db" not in reverb[0].meta

        noisy_reverb = DegradeSpec(task="dereverb", reverb_noise_snr_db=10.0)
        assert load_manifest(build_dataset(clean_dir, noisy_reverb, tmp_path / "rn"))[0].meta["snr_db"] == "10"

        lowres = load_manifest(build_dataset(clean_dir, DegradeSpec(task="superres", scale=4), tmp_path / "s"))
        assert [e.meta for e in lowres] == [{"scale": "4"}] * 3

    def test_other_rates_are_resampled(self, tmp_path):
        clean_dir = tmp_path / "clean8k"
        write_wav(harmonic_speech(0.5, sample_rate=8000), clean_dir / "low.wav")
        entries = load_manifest(build_dataset(clean_dir, DegradeSpec(task="superres"), tmp_path / "out"))
        assert entries[0].clean_path == (tmp_path / "out" / "clean" / "low.wav").resolve()
        assert read_wav(entries[0].clean_path).sample_rate == SAMPLE_RATE
        assert len(read_wav(entries[0].degraded_path)) == 8000

    def test_missing_or_empty_directory(self, tmp_path):
        with pytest.raises(AudioFormatError):
            build_dataset(tmp_path / "nope", DegradeSpec(task="denoise"), tmp_path / "out")
        (tmp_path / "empty").mkdir()
        with pytest.raises(AudioFormatError):
            build_dataset(tmp_path / "empty", DegradeSpec(task="denoise"), tmp_path / "out")

    def test_conditions_are_uniform(self):
        builder = DatasetBuilder(DegradeSpec(task="denoise"), seed=0)
        draws = [builder.draw_condition(np.random.default_rng([0, i])) for i in range(1000)]

        snr_counts = [sum(d["snr_db"] == f"{snr:g}" for d in draws) for snr in TRAIN_SNRS]
        kind_counts = [sum(d["noise"] == kind for d in draws) for kind in ("white", "pink", "babble", "doorbell")]
        assert sum(snr_counts) == sum(kind_counts) == 1000
        assert stats.chisquare(snr_counts).pvalue > 0.001
        assert stats.chisquare(kind_counts).pvalue > 0.001

    def test_t60_draws_stay_in_range(self):
        builder = DatasetBuilder(DegradeSpec(task="dereverb", t60_range=(0.4, 0.6)))
        rng = np.random.default_rng(0)
        values = [float(builder.draw_condition(rng)["t60"]) for _ in range(200)]
        assert min(values) >= 0.4 and max(values) <= 0.6
