"""
Tests for the inference service
"""

from unittest.mock import patch

import numpy as np
import pytest
import torch

from cmgan.exceptions import AudioFormatError
from cmgan.models.audio import ManifestEntry, Task, Waveform
from cmgan.models.network import GeneratorConfig
from cmgan.models.spectral import StftConfig
from cmgan.nn.generator import Generator
from cmgan.services.audio_io import read_wav, write_wav
from cmgan.services.checkpoint import save_checkpoint
from cmgan.services.enhancer import SpeechEnhancer

from .conftest import SAMPLE_RATE, harmonic_speech


def small_generator(task=None) -> Generator:
    torch.manual_seed(0)
    return Generator(GeneratorConfig(channels=8, num_blocks=1, heads=2, task=task))


@pytest.fixture
def enhancer():
    return SpeechEnhancer(small_generator())


class TestEnhance:
    @pytest.mark.parametrize("samples", [150, 4000, 16001])
    def test_output_keeps_length_and_rate(self, enhancer, samples):
        noisy = Waveform(samples=np.random.default_rng(samples).standard_normal(samples) * 0.1, sample_rate=SAMPLE_RATE)
        out = enhancer.enhance(noisy)
        assert len(out) == samples
        assert out.sample_rate == SAMPLE_RATE

    def test_inference_is_deterministic(self, enhancer, speech):
        first, second = enhancer.enhance(speech), enhancer.enhance(speech)
        np.testing.assert_array_equal(first.samples, second.samples)
        assert not enhancer.generator.training

    def test_identity_mask_reproduces_input(self, enhancer, speech):
        gen = enhancer.generator
        bins = gen.cfg.freq_bins

        def unit_mask(d):
            return torch.ones(d.shape[0], d.shape[2], bins)

        def zero_residual(d):
            return torch.zeros(d.shape[0], d.shape[2], bins, 2)

        with patch.object(gen.mask_decoder, "forward", side_effect=unit_mask), \
                patch.object(gen.complex_decoder, "forward", side_effect=zero_residual):
            out = enhancer.enhance(speech)

        error = out.samples - speech.samples
        assert np.sqrt(np.mean(error ** 2)) < 1e-5 * np.sqrt(np.mean(speech.samples ** 2))
        assert np.max(np.abs(error)) < 1e-4

    def test_rate_mismatch(self, enhancer, speech):
        with pytest.raises(AudioFormatError):
            enhancer.enhance(harmonic_speech(0.5, sample_rate=8000))

    def test_superres_accepts_low_rate_input(self):
        enhancer = SpeechEnhancer(small_generator(Task.SUPERRES))
        out = enhancer.enhance(harmonic_speech(0.5, sample_rate=8000))
        assert out.sample_rate == SAMPLE_RATE
        assert len(out) == SAMPLE_RATE // 2

    def test_superres_rejects_non_integer_ratio(self):
        enhancer = SpeechEnhancer(small_generator(Task.SUPERRES))
        with pytest.raises(AudioFormatError):
            enhancer.enhance(harmonic_speech(0.5, sample_rate=12000))

    def test_stft_must_match_generator(self):
        with pytest.raises(AudioFormatError):
            SpeechEnhancer(small_generator(), StftConfig(fft_size=512, window_len=512))


class TestFiles:
    def test_from_checkpoint_matches_in_memory_model(self, tmp_path, speech):
        generator = small_generator()
        path = save_checkpoint(tmp_path / "g.pt", generator)
        loaded = SpeechEnhancer.from_checkpoint(path)
        np.testing.assert_array_equal(
            loaded.enhance(speech).samples, SpeechEnhancer(generator).enhance(speech).samples
        )

    def test_enhance_file_keeps_name(self, enhancer, tmp_path, speech):
        noisy = write_wav(speech, tmp_path / "noisy" / "p232_001.wav")
        out = enhancer.enhance_file(noisy, tmp_path / "enhanced")
        assert out == tmp_path / "enhanced" / "p232_001.wav"
        assert len(read_wav(out)) == len(speech)

    def test_enhance_manifest(self, enhancer, tmp_path, clean_files):
        entries = [ManifestEntry(clean_path=p, degraded_path=p, task=Task.DENOISE) for p in clean_files]
        outputs = enhancer.enhance_manifest(entries, tmp_path / "enhanced")
        assert [p.name for p in outputs] == [p.name for p in clean_files]
        assert all(p.is_file() for p in outputs)
