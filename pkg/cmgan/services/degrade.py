"""
Degradation Synthesis

CONCEPT: Build paired (clean, degraded) data for the three tasks from clean
speech only, following y(t) = x(t) * h(t) + n(t).

TASKS:
- denoise:   y = x + g·n, g set so the whole-track SNR hits the target exactly
- dereverb:  y = x * h with a synthetic exponentially decaying RIR, peak-matched
             to x; optional stationary noise on top
- superres:  y = up(down(x, s), s), i.e. band-limited to 8/s kHz at 16 kHz

DETERMINISM: every random draw for track i comes from
``np.random.default_rng([seed, i])``, so results do not depend on worker order.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from scipy import signal

from cmgan.exceptions import AudioFormatError, ConfigError
from cmgan.models.audio import ManifestEntry, Task, Waveform
from cmgan.models.degrade import DegradeSpec
from cmgan.services.audio_io import read_wav, write_manifest, write_wav
from cmgan.utils import dsp

logger = logging.getLogger(__name__)

# Amplitude decays by 60 dB (a factor 1000) after t60 seconds
LN_1000 = math.log(1000.0)
RIR_LENGTH_FACTOR = 1.5


# =============================================================================
# Primitives
# =============================================================================

def mix_at_snr(clean: Waveform, noise: Waveform, snr_db: float) -> Waveform:
    """
    x + g·n with 10·log10(Σx² / Σ(g·n)²) = snr_db over the whole track

    The noise is looped or cropped to the clean length.
    """
    if not math.isfinite(snr_db):
        raise ConfigError(f"snr_db must be finite, got {snr_db}")
    if noise.sample_rate != clean.sample_rate:
        raise ConfigError(f"noise is at {noise.sample_rate} Hz, clean at {clean.sample_rate} Hz")
    x = clean.samples
    n = np.resize(noise.samples, x.size)
    clean_power = float(np.sum(x ** 2))
    noise_power = float(np.sum(n ** 2))
    if clean_power == 0.0 or noise_power == 0.0:
        raise ConfigError("cannot mix at an SNR when clean or noise has zero energy")
    gain = math.sqrt(clean_power / (noise_power * 10.0 ** (snr_db / 10.0)))
    return Waveform(samples=x + gain * n, sample_rate=clean.sample_rate)


def convolve_rir(clean: Waveform, h: Waveform) -> Waveform:
    """Linear convolution truncated to the clean length, rescaled to the clean peak"""
    x = clean.samples
    y = signal.fftconvolve(x, h.samples, mode="full")[: x.size]
    peak_in, peak_out = np.max(np.abs(x)), np.max(np.abs(y))
    if peak_out > 0.0:
        y = y * (peak_in / peak_out)
    return Waveform(samples=y, sample_rate=clean.sample_rate)


def decay_envelope(t60: float, num_samples: int, sample_rate: int) -> np.ndarray:
    """Amplitude envelope exp(-ln(1000)·t/t60)"""
    t = np.arange(num_samples) / sample_rate
    return np.exp(-LN_1000 * t / t60)


def synth_rir(t60: float, sample_rate: int, seed: int) -> Waveform:
    """
    Direct-path impulse followed by exponentially decaying uniform noise

    Length is 1.5·t60; h[0] = 1 is the largest tap.
    """
    if t60 <= 0.0:
        raise ConfigError(f"t60 must be positive, got {t60}")
    n = max(2, int(round(RIR_LENGTH_FACTOR * t60 * sample_rate)))
    rng = np.random.default_rng(seed)
    h = rng.uniform(-1.0, 1.0, n) * decay_envelope(t60, n, sample_rate)
    h[0] = 1.0
    return Waveform(samples=h, sample_rate=sample_rate)


def estimate_t60(h: Waveform, low_db: float = -5.0, high_db: float = -25.0) -> float:
    """
    Schroeder backward integration; line fit between ``low_db`` and ``high_db``
    of the energy decay curve, extrapolated to -60 dB
    """
    energy = np.cumsum(h.samples[::-1] ** 2)[::-1]
    if energy[0] <= 0.0:
        raise ConfigError("impulse response has no energy")
    with np.errstate(divide="ignore"):
        edc = 10.0 * np.log10(energy / energy[0])
    region = np.nonzero((edc <= low_db) & (edc >= high_db))[0]
    if region.size < 2:
        raise ConfigError("impulse response too short to estimate t60")
    t = region / h.sample_rate
    slope, _ = np.polyfit(t, edc[region], 1)
    return float(-60.0 / slope)


def make_lowres(clean: Waveform, s: int) -> Waveform:
    """Down to rate/s and back up; same length and rate as the input"""
    rate = clean.sample_rate
    if s < 2 or rate % s:
        raise ConfigError(f"scale {s} must be an integer >= 2 dividing {rate}")
    low = dsp.resample(clean, rate, rate // s)
    back = dsp.resample(low, rate // s, rate).samples
    out = np.zeros(len(clean))
    out[: min(back.size, out.size)] = back[: out.size]
    return Waveform(samples=out, sample_rate=rate)


def make_noise(kind: str, num_samples: int, sample_rate: int, seed: int) -> Waveform:
    """
    Unit-RMS synthetic noise

    - white:    Gaussian
    - pink:     1/f power via spectral shaping
    - babble:   six band-passed noises, each with a slow syllable-rate envelope
    - doorbell: high-frequency two-tone sine bursts
    """
    rng = np.random.default_rng(seed)
    t = np.arange(num_samples) / sample_rate
    nyquist = sample_rate / 2.0

    if kind == "white":
        noise = rng.standard_normal(num_samples)
    elif kind == "pink":
        spectrum = np.fft.rfft(rng.standard_normal(num_samples))
        freqs = np.fft.rfftfreq(num_samples, d=1.0 / sample_rate)
        shape = np.ones_like(freqs)
        shape[1:] = 1.0 / np.sqrt(freqs[1:])
        shape[0] = 0.0
        noise = np.fft.irfft(spectrum * shape, n=num_samples)
    elif kind == "babble":
        noise = np.zeros(num_samples)
        for _ in range(6):
            low = rng.uniform(150.0, 600.0)
            high = min(rng.uniform(2000.0, 4000.0), 0.9 * nyquist)
            sos = signal.butter(4, [low, high], btype="bandpass", fs=sample_rate, output="sos")
            voice = signal.sosfilt(sos, rng.standard_normal(num_samples))
            rate_hz = rng.uniform(3.0, 6.0)
            envelope = 0.5 * (1.0 + np.sin(2 * np.pi * rate_hz * t + rng.uniform(0, 2 * np.pi)))
            noise += voice * envelope
    elif kind == "doorbell":
        f1, f2 = (min(f, 0.9 * nyquist) for f in (rng.uniform(2500.0, 3500.0), rng.uniform(3800.0, 4800.0)))
        period = 0.5
        phase = (t % period) / period
        tone = np.where(phase < 0.5, np.sin(2 * np.pi * f1 * t), np.sin(2 * np.pi * f2 * t))
        gate = np.where(phase < 0.8, np.exp(-3.0 * (t % (period / 2))), 0.0)
        noise = tone * gate + 1e-3 * rng.standard_normal(num_samples)
    else:
        raise ConfigError(f"unknown noise kind {kind!r}")

    rms = math.sqrt(float(np.mean(noise ** 2)))
    if rms == 0.0:
        noise = rng.standard_normal(num_samples)
        rms = math.sqrt(float(np.mean(noise ** 2)))
    return Waveform(samples=noise / rms, sample_rate=sample_rate)


# =============================================================================
# Dataset builder
# =============================================================================

class DatasetBuilder:
    """
    Writes ``out_dir/degraded/*.wav`` and ``out_dir/manifest.jsonl``

    Usage:
        builder = DatasetBuilder(spec, seed=0)
        manifest = builder.build(Path("clean"), Path("out"))
    """

    def __init__(self, spec: DegradeSpec, seed: int = 0, num_workers: int = 1):
        self.spec = spec
        self.seed = seed
        self.num_workers = num_workers

    def draw_condition(self, rng: np.random.Generator) -> Dict[str, str]:
        """Random degradation parameters for one track, as manifest meta strings"""
        spec = self.spec
        if spec.task == Task.DENOISE:
            choices = spec.snr_choices
            snr_db = choices[int(rng.integers(len(choices)))]
            kind = spec.noise_kinds[int(rng.integers(len(spec.noise_kinds)))]
            return {"snr_db": f"{snr_db:g}", "noise": kind, "noise_seed": str(int(rng.integers(2 ** 31)))}
        if spec.task == Task.DEREVERB:
            low, high = spec.t60_range
            t60 = round(float(rng.uniform(low, high)), 3)
            rir_seed = int(rng.integers(2 ** 31))
            meta = {"t60": f"{t60:g}", "rir_id": f"synth-{rir_seed}"}
            if spec.reverb_noise_snr_db is not None:
                meta["snr_db"] = f"{spec.reverb_noise_snr_db:g}"
                meta["noise"] = "white"
                meta["noise_seed"] = str(int(rng.integers(2 ** 31)))
            return meta
        return {"scale": str(spec.scale)}

    def degrade(self, clean: Waveform, meta: Dict[str, str]) -> Waveform:
        """Apply the degradation described by ``meta``"""
        task = self.spec.task
        if task == Task.SUPERRES:
            return make_lowres(clean, int(meta["scale"]))
        if task == Task.DEREVERB:
            rir = synth_rir(float(meta["t60"]), clean.sample_rate, int(meta["rir_id"].split("-")[1]))
            degraded = convolve_rir(clean, rir)
            if "snr_db" not in meta:
                return degraded
            clean = degraded
        noise = make_noise(meta["noise"], len(clean), clean.sample_rate, int(meta["noise_seed"]))
        return mix_at_snr(clean, noise, float(meta["snr_db"]))

    def _process(self, index: int, path: Path, out_dir: Path) -> ManifestEntry:
        rng = np.random.default_rng([self.seed, index])
        clean = read_wav(path)
        clean_path = path.resolve()
        if clean.sample_rate != self.spec.sample_rate:
            clean = dsp.resample(clean, clean.sample_rate, self.spec.sample_rate)
            clean_path = write_wav(clean, out_dir / "clean" / path.name).resolve()
            logger.debug(f"Resampled {path.name} to {self.spec.sample_rate} Hz")

        meta = self.draw_condition(rng)
        degraded = self.degrade(clean, meta)
        degraded_path = write_wav(degraded, out_dir / "degraded" / path.name).resolve()
        return ManifestEntry(clean_path=clean_path, degraded_path=degraded_path, task=self.spec.task, meta=meta)

    def build(self, clean_dir: Path, out_dir: Path) -> Path:
        """
        Degrade every ``*.wav`` under ``clean_dir`` (sorted by name)

        Returns:
            Path of the written manifest
        """
        clean_dir, out_dir = Path(clean_dir), Path(out_dir)
        if not clean_dir.is_dir():
            raise AudioFormatError(f"clean directory not found: {clean_dir}")
        files = sorted(clean_dir.glob("*.wav"))
        if not files:
            raise AudioFormatError(f"no .wav files in {clean_dir}")

        logger.info(f"🎛️ Degrading {len(files)} files for {self.spec.task.value} (seed {self.seed})")
        jobs: List[Tuple[int, Path]] = list(enumerate(files))
        if self.num_workers <= 1:
            entries = [self._process(i, path, out_dir) for i, path in jobs]
        else:
            with ThreadPoolExecutor(max_workers=self.num_workers) as pool:
                entries = list(pool.map(lambda job: self._process(job[0], job[1], out_dir), jobs))

        manifest = write_manifest(entries, out_dir / "manifest.jsonl")
        logger.info(f"✅ Dataset written: {manifest}")
        return manifest


def build_dataset(clean_dir: Path, spec: DegradeSpec, out_dir: Path, seed: int = 0, num_workers: int = 1) -> Path:
    """Functional entry point for ``DatasetBuilder.build``"""
    return DatasetBuilder(spec, seed, num_workers).build(clean_dir, out_dir)
