"""
Tests for the objective metrics

Covers the fixed points of each metric, hand-computed values, and
agreement with the loop-based reference versions in cmgan.services.oracles.
"""

import math
from unittest.mock import Mock

import numpy as np
import pytest

from cmgan.exceptions import ConfigError, DegenerateFrameError, QualityProviderError, ShapeError
from cmgan.models.audio import ManifestEntry, Task, Waveform
from cmgan.models.metrics import MetricConfig
from cmgan.models.training import QualityKind
from cmgan.services import metrics, oracles
from cmgan.services.audio_io import write_wav
from cmgan.services.metrics import MetricEvaluator, evaluate_pair

from .conftest import SAMPLE_RATE, harmonic_speech


@pytest.fixture
def noise_pair(rng):
    x = rng.standard_normal(SAMPLE_RATE)
    y = x + 0.3 * rng.standard_normal(SAMPLE_RATE)
    return x, y


class TestFixedPoints:
    """Identical inputs hit the documented sentinels"""

    def test_identical_signals(self, speech):
        x = speech.samples
        assert metrics.snr(x, x) == 100.0
        assert metrics.ssnr(x, x) == 35.0
        assert metrics.lsd(x, x, "e") == 0.0
        assert metrics.lsd(x, x, "10") == 0.0
        assert metrics.llr(x, x) == pytest.approx(0.0, abs=1e-9)
        assert metrics.cd(x, x) == pytest.approx(0.0, abs=1e-9)
        assert metrics.fwsegsnr(x, x) == pytest.approx(35.0)

    def test_silent_reference(self):
        silence = np.zeros(SAMPLE_RATE)
        noise = np.random.default_rng(0).standard_normal(SAMPLE_RATE)
        assert metrics.snr(silence, silence) == 100.0
        assert metrics.snr(silence, noise) == -100.0
        assert metrics.ssnr(silence, noise) == -10.0
        assert math.isnan(metrics.llr(silence, noise))
        assert math.isnan(metrics.cd(silence, noise))


class TestHandComputedValues:
    def test_inverted_signal_ssnr(self, speech):
        # error 2x gives 10·log10(1/4) in every active frame
        assert metrics.ssnr(speech.samples, -speech.samples) == pytest.approx(-6.0206, abs=1e-4)

    def test_snr_of_known_error(self):
        x = np.ones(1000)
        assert metrics.snr(x, 0.9 * x) == pytest.approx(20.0)

    def test_lsd_of_doubled_signal(self, noise_pair):
        x, _ = noise_pair
        assert metrics.lsd(x, 2.0 * x, "10") == pytest.approx(math.log10(4.0), abs=1e-9)
        assert metrics.lsd(x, 2.0 * x, "e") == pytest.approx(math.log(4.0), abs=1e-9)

    def test_llr_ignores_gain(self, noise_pair):
        x, _ = noise_pair
        assert metrics.llr(x, 3.0 * x) == pytest.approx(0.0, abs=1e-9)

    def test_more_noise_scores_worse(self, speech, rng):
        x = speech.samples
        noise = rng.standard_normal(x.size) * 0.05
        light, heavy = x + noise, x + 4.0 * noise
        assert metrics.ssnr(x, light) > metrics.ssnr(x, heavy)
        assert metrics.fwsegsnr(x, light) > metrics.fwsegsnr(x, heavy)
        assert metrics.llr(x, light) < metrics.llr(x, heavy)
        assert metrics.lsd(x, light) < metrics.lsd(x, heavy)


class TestLpc:
    def test_recovers_all_pole_coefficients(self):
        rng = np.random.default_rng(5)
        excitation = rng.standard_normal(20000)
        x = np.zeros_like(excitation)
        for n in range(excitation.size):
            x[n] = excitation[n] + 0.9 * x[n - 1] - 0.5 * x[n - 2] if n >= 2 else excitation[n]
        a = metrics.lpc(x, 2)
        np.testing.assert_allclose(a, [1.0, -0.9, 0.5], atol=0.03)

    def test_zero_frame(self):
        with pytest.raises(DegenerateFrameError):
            metrics.lpc(np.zeros(480), 16)

    def test_first_order_cepstrum(self):
        c = metrics.cepstrum_from_lpc(np.array([1.0, 0.5]), 3)
        np.testing.assert_allclose(c, [-0.5, 0.125, -0.5 ** 3 / 3])

    def test_autocorrelation_beyond_frame(self):
        r = metrics.autocorrelation(np.array([1.0, 2.0]), 3)
        assert list(r) == [5.0, 2.0, 0.0, 0.0]

    def test_gaussian_bands(self):
        bands = metrics.gaussian_bands(16000, 512)
        assert bands.shape == (25, 257)
        assert np.all(bands <= 1.0)
        assert np.all(bands.max(axis=1) > 0.5)


class TestOracleAgreement:
    """Production metrics against the loop-based references on random pairs"""

    def test_ten_random_pairs(self):
        rng = np.random.default_rng(11)
        cfg = MetricConfig()
        for _ in range(10):
            x = rng.standard_normal(SAMPLE_RATE)
            y = x + rng.uniform(0.05, 1.0) * rng.standard_normal(SAMPLE_RATE)
            production = evaluate_pair(
                Waveform(samples=x, sample_rate=SAMPLE_RATE),
                Waveform(samples=y, sample_rate=SAMPLE_RATE),
                list(oracles.ORACLE_METRICS),
                cfg,
            )
            reference = oracles.oracle_values(x, y, SAMPLE_RATE, cfg)
            for name in oracles.ORACLE_METRICS:
                assert production[name] == pytest.approx(reference[name], abs=1e-6), name

    def test_short_signal(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal(300)
        y = x + 0.5 * rng.standard_normal(300)
        cfg = MetricConfig()
        reference = oracles.oracle_values(x, y, SAMPLE_RATE, cfg)
        assert metrics.ssnr(x, y, SAMPLE_RATE, cfg) == pytest.approx(reference["ssnr"], abs=1e-6)
        assert metrics.llr(x, y, SAMPLE_RATE, cfg) == pytest.approx(reference["llr"], abs=1e-6)


class TestEvaluatePair:
    def test_input_checks(self, speech):
        other_rate = Waveform(samples=speech.samples, sample_rate=8000)
        shorter = Waveform(samples=speech.samples[:-1], sample_rate=SAMPLE_RATE)
        with pytest.raises(ShapeError):
            evaluate_pair(speech, other_rate, ["snr"])
        with pytest.raises(ShapeError):
            evaluate_pair(speech, shorter, ["snr"])
        with pytest.raises(ConfigError):
            evaluate_pair(speech, speech, ["pesqq"])
        with pytest.raises(QualityProviderError):
            evaluate_pair(speech, speech, ["pesq"])

    def test_pesq_comes_from_provider(self, speech):
        provider = Mock()
        provider.score.return_value = 3.25
        assert evaluate_pair(speech, speech, ["pesq"], provider=provider) == {"pesq": 3.25}
        provider.score.assert_called_once()


class TestQualityForDisc:
    def test_llr_quality_is_local(self, speech):
        provider = Mock()
        score = metrics.quality_for_disc(speech, speech, QualityKind.LLR, provider)
        assert score.value == pytest.approx(0.0, abs=1e-9)
        provider.score.assert_not_called()

    def test_pesq_quality_is_normalized(self, speech):
        provider = Mock()
        provider.score.return_value = 4.5
        assert metrics.quality_for_disc(speech, speech, QualityKind.PESQ, provider).value == 1.0

    def test_pesq_without_provider(self, speech):
        with pytest.raises(QualityProviderError):
            metrics.quality_for_disc(speech, speech, QualityKind.PESQ)


class TestMetricEvaluator:
    def test_scores_manifest_in_order(self, tmp_path):
        entries = []
        for k in range(3):
            clean = harmonic_speech(0.5, seed=3)
            noisy = Waveform(samples=clean.samples + 0.01 * (k + 1) * np.sin(np.arange(len(clean))), sample_rate=SAMPLE_RATE)
            clean_path = write_wav(clean, tmp_path / "clean" / f"t{k}.wav")
            noisy_path = write_wav(noisy, tmp_path / "noisy" / f"t{k}.wav")
            entries.append(ManifestEntry(clean_path=clean_path, degraded_path=noisy_path, task=Task.DENOISE))

        rows = MetricEvaluator(["snr", "lsd_10"], num_workers=2).evaluate(entries)
        assert [set(row) for row in rows] == [{"snr", "lsd_10"}] * 3
        assert rows[0]["snr"] > rows[1]["snr"] > rows[2]["snr"]

        enhanced = tmp_path / "enhanced"
        for entry in entries:
            write_wav(Waveform(samples=np.zeros(len(harmonic_speech(0.5))), sample_rate=SAMPLE_RATE),
                      enhanced / entry.degraded_path.name)
        silent_rows = MetricEvaluator(["snr"]).evaluate(entries, enhanced)
        assert all(row["snr"] == pytest.approx(0.0, abs=0.01) for row in silent_rows)

    def test_summarize_ignores_nan(self):
        rows = [{"snr": 10.0, "llr": float("nan")}, {"snr": 20.0, "llr": 1.0}]
        assert MetricEvaluator.summarize(rows) == {"snr": 15.0, "llr": 1.0}
        assert MetricEvaluator.summarize([]) == {}
