"""
Inference Service

FLOW:
    waveform (16 kHz) → unit-RMS gain → STFT → power-law compression
      → pack (magnitude, real, imaginary) → generator
      → decompression → ISTFT (same length) → undo gain

Super-resolution checkpoints also accept low-rate input: it is first
brought to 16 kHz with the integer-ratio resampler, so the output has the
input's duration at the model rate.
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

import torch

from cmgan.exceptions import AudioFormatError
from cmgan.models.audio import ManifestEntry, Task, Waveform
from cmgan.models.spectral import StftConfig
from cmgan.nn.generator import Generator
from cmgan.services.audio_io import read_wav, write_wav
from cmgan.services.checkpoint import generator_from, load_checkpoint
from cmgan.utils import dsp

logger = logging.getLogger(__name__)


class SpeechEnhancer:
    """
    Runs a trained generator over whole tracks

    Usage:
        enhancer = SpeechEnhancer.from_checkpoint(Path("runs/toy/last.pt"))
        clean = enhancer.enhance(read_wav(Path("noisy.wav")))
    """

    def __init__(self, generator: Generator, stft_cfg: Optional[StftConfig] = None, sample_rate: int = 16000):
        self.generator = generator.eval()
        self.stft_cfg = stft_cfg or StftConfig()
        self.sample_rate = sample_rate
        if self.stft_cfg.freq_bins != generator.cfg.freq_bins:
            raise AudioFormatError(
                f"STFT gives {self.stft_cfg.freq_bins} bins, generator expects {generator.cfg.freq_bins}"
            )

    @classmethod
    def from_checkpoint(cls, path: Path, stft_cfg: Optional[StftConfig] = None) -> "SpeechEnhancer":
        payload = load_checkpoint(path)
        generator = generator_from(payload)
        sample_rate = (payload.get("train_config") or {}).get("sample_rate", 16000)
        logger.info(f"🔧 Loaded generator from {path} (task {generator.cfg.task})")
        return cls(generator, stft_cfg, sample_rate)

    def _to_model_rate(self, w: Waveform) -> Waveform:
        if w.sample_rate == self.sample_rate:
            return w
        if self.generator.cfg.task == Task.SUPERRES and self.sample_rate % w.sample_rate == 0:
            return dsp.resample(w, w.sample_rate, self.sample_rate)
        raise AudioFormatError(f"input is at {w.sample_rate} Hz; the model runs at {self.sample_rate} Hz")

    @torch.no_grad()
    def enhance(self, w: Waveform) -> Waveform:
        """Enhance one track; output length equals the (model-rate) input length"""
        w = self._to_model_rate(w)
        c = self.generator.cfg.compress_exponent
        noisy = torch.from_numpy(w.samples).float().unsqueeze(0)
        gain = dsp.level_scale(noisy)

        spec = dsp.stft_tensor(noisy * gain, self.stft_cfg)
        real, imag = dsp.compress_tensor(spec.real, spec.imag, c)
        out = self.generator(dsp.pack_tensor(real, imag))

        est_real, est_imag = dsp.decompress_tensor(out.real, out.imag, c)
        wave = dsp.istft_tensor(torch.complex(est_real, est_imag), self.stft_cfg, len(w)) / gain
        return Waveform(samples=wave.squeeze(0).double().numpy(), sample_rate=self.sample_rate)

    def enhance_file(self, path: Path, out_dir: Path) -> Path:
        """Enhance ``path`` into ``out_dir`` under the same file name"""
        enhanced = self.enhance(read_wav(path))
        return write_wav(enhanced, Path(out_dir) / Path(path).name)

    def enhance_manifest(self, entries: Sequence[ManifestEntry], out_dir: Path) -> List[Path]:
        logger.info(f"🎧 Enhancing {len(entries)} tracks into {out_dir}")
        return [self.enhance_file(entry.degraded_path, out_dir) for entry in entries]
