"""
Spectral Transform Utilities

CONCEPT: One STFT implementation serves two callers.
- The generator and trainer need a batched, differentiable transform
  (``stft_tensor`` / ``istft_tensor`` on torch tensors).
- Metrics, tests and file-level tools want plain arrays in double
  precision (``stft`` / ``istft`` on Waveform and Spectrogram models).
The array API is a float64 wrapper around the tensor API, so both agree.

RECONSTRUCTION:
torch.istft does weighted overlap-add and divides by the running sum of
squared windows, which makes Hamming at 75% overlap exactly invertible.
"""

import logging
from typing import Tuple

import numpy as np
import torch
from scipy import signal

from cmgan.exceptions import ConfigError, ShapeError
from cmgan.models.audio import Waveform
from cmgan.models.spectral import PackedInput, Spectrogram, StftConfig

logger = logging.getLogger(__name__)

_WINDOWS = {"hamming": torch.hamming_window, "hanning": torch.hann_window}


def _window(cfg: StftConfig, like: torch.Tensor) -> torch.Tensor:
    return _WINDOWS[cfg.window](cfg.window_len, periodic=True, dtype=like.real.dtype, device=like.device)


# =============================================================================
# Tensor API (batched, differentiable)
# =============================================================================

def stft_tensor(x: torch.Tensor, cfg: StftConfig) -> torch.Tensor:
    """
    Batched STFT

    Args:
        x: ``[batch, samples]`` or ``[samples]`` real tensor

    Returns:
        Complex tensor ``[batch, frames, freq_bins]`` (batch dim kept only if given)
    """
    squeeze = x.dim() == 1
    if squeeze:
        x = x.unsqueeze(0)
    if x.shape[-1] < 1:
        raise ShapeError("cannot analyse an empty signal")
    # reflection needs more samples than the pad width
    pad_mode = "reflect" if x.shape[-1] > cfg.fft_size // 2 else "constant"
    spec = torch.stft(
        x,
        n_fft=cfg.fft_size,
        hop_length=cfg.hop,
        win_length=cfg.window_len,
        window=_window(cfg, x),
        center=cfg.center,
        pad_mode=pad_mode,
        normalized=False,
        onesided=True,
        return_complex=True,
    ).transpose(-1, -2)
    return spec.squeeze(0) if squeeze else spec


def istft_tensor(spec: torch.Tensor, cfg: StftConfig, length: int) -> torch.Tensor:
    """
    Batched inverse STFT

    Args:
        spec: complex ``[batch, frames, freq_bins]`` or ``[frames, freq_bins]``
        length: number of output samples

    Returns:
        Real tensor ``[batch, length]`` (or ``[length]``)
    """
    if spec.shape[-1] != cfg.freq_bins:
        raise ShapeError(f"spectrogram has {spec.shape[-1]} bins, config expects {cfg.freq_bins}")
    squeeze = spec.dim() == 2
    if squeeze:
        spec = spec.unsqueeze(0)
    wave = torch.istft(
        spec.transpose(-1, -2),
        n_fft=cfg.fft_size,
        hop_length=cfg.hop,
        win_length=cfg.window_len,
        window=_window(cfg, spec),
        center=cfg.center,
        normalized=False,
        onesided=True,
        length=length,
        return_complex=False,
    )
    return wave.squeeze(0) if squeeze else wave


def compress_tensor(real: torch.Tensor, imag: torch.Tensor, exponent: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """|Y|^c with phase kept: both parts scaled by |Y|^(c-1); zero bins stay zero"""
    _check_exponent(exponent)
    power = real * real + imag * imag
    nonzero = power > 0
    safe = torch.where(nonzero, power, torch.ones_like(power))
    scale = torch.where(nonzero, safe ** (0.5 * (exponent - 1.0)), torch.zeros_like(power))
    return real * scale, imag * scale


def decompress_tensor(real: torch.Tensor, imag: torch.Tensor, exponent: float) -> Tuple[torch.Tensor, torch.Tensor]:
    """Inverse of ``compress_tensor``; the scale exponent is positive so gradients stay finite at zero"""
    _check_exponent(exponent)
    power = real * real + imag * imag
    scale = power ** (0.5 * (1.0 / exponent - 1.0))
    return real * scale, imag * scale


def pack_tensor(real: torch.Tensor, imag: torch.Tensor) -> torch.Tensor:
    """``[B, T, F]`` parts → ``[B, T, F, 3]`` ordered (magnitude, real, imaginary)"""
    return torch.stack([torch.hypot(real, imag), real, imag], dim=-1)


def level_scale(x: torch.Tensor, eps: float = 1e-12) -> torch.Tensor:
    """
    Per-item gain sqrt(L / Σx²) that brings ``[B, L]`` signals to unit RMS

    Returned as ``[B, 1]``. The degraded input sets the gain; the clean
    target of the same pair is scaled by it too, and enhanced output is
    divided by it.
    """
    energy = (x * x).sum(dim=-1, keepdim=True).clamp_min(eps)
    return torch.sqrt(x.shape[-1] / energy)


# =============================================================================
# Array API (double precision, pydantic models)
# =============================================================================

def stft(w: Waveform, cfg: StftConfig) -> Spectrogram:
    """Analyse a waveform; T = floor(len/hop) + 1 when centered"""
    spec = stft_tensor(torch.from_numpy(w.samples), cfg).numpy()
    return Spectrogram(real=spec.real, imag=spec.imag, sample_rate=w.sample_rate, config=cfg)


def istft(s: Spectrogram, cfg: StftConfig, out_len: int) -> Waveform:
    """Resynthesize ``out_len`` samples"""
    if s.config != cfg:
        raise ShapeError(f"spectrogram was made with {s.config}, not {cfg}")
    spec = torch.complex(torch.from_numpy(s.real), torch.from_numpy(s.imag))
    wave = istft_tensor(spec, cfg, out_len).numpy()
    return Waveform(samples=wave, sample_rate=s.sample_rate)


def compress(s: Spectrogram, c: float = 0.3) -> Spectrogram:
    """Power-law compression of the magnitude"""
    return _rescale(s, c, inverse=False)


def decompress(s: Spectrogram, c: float = 0.3) -> Spectrogram:
    """Undo ``compress``"""
    return _rescale(s, c, inverse=True)


def pack_input(s: Spectrogram) -> PackedInput:
    """Single spectrogram → ``[1, T, F, 3]`` generator input"""
    packed = np.stack([s.magnitude, s.real, s.imag], axis=-1)[np.newaxis]
    return PackedInput(tensor=packed)


def design_lowpass(cutoff_hz: float, width_hz: float, sample_rate: float, atten_db: float = 60.0) -> np.ndarray:
    """Odd-length Kaiser-windowed sinc with unit DC gain"""
    numtaps, beta = signal.kaiserord(atten_db, width_hz / (0.5 * sample_rate))
    numtaps |= 1
    return signal.firwin(numtaps, cutoff_hz, window=("kaiser", beta), fs=sample_rate)


def resample(w: Waveform, from_hz: int, to_hz: int) -> Waveform:
    """
    Integer-ratio rate conversion

    The anti-alias / anti-image filter cuts at 0.9 × the lower Nyquist
    and reaches 60 dB at the lower Nyquist. Output length is
    floor(len × to / from).
    """
    if w.sample_rate != from_hz:
        raise ConfigError(f"waveform is at {w.sample_rate} Hz, not {from_hz} Hz")
    if from_hz == to_hz:
        return Waveform(samples=w.samples.copy(), sample_rate=to_hz)
    if to_hz % from_hz == 0:
        up, down = to_hz // from_hz, 1
    elif from_hz % to_hz == 0:
        up, down = 1, from_hz // to_hz
    else:
        raise ConfigError(f"{from_hz} Hz → {to_hz} Hz is not an integer ratio")

    lower_nyquist = 0.5 * min(from_hz, to_hz)
    taps = design_lowpass(0.9 * lower_nyquist, 0.2 * lower_nyquist, from_hz * up)
    out = signal.resample_poly(w.samples, up, down, window=taps, padtype="line")
    out_len = max(1, len(w) * to_hz // from_hz)
    logger.debug(f"Resampled {len(w)} samples {from_hz}→{to_hz} Hz with {taps.size} taps")
    return Waveform(samples=out[:out_len], sample_rate=to_hz)


def _check_exponent(c: float) -> None:
    if not 0.0 < c <= 1.0:
        raise ConfigError(f"compression exponent must lie in (0, 1], got {c}")


def _rescale(s: Spectrogram, c: float, inverse: bool) -> Spectrogram:
    _check_exponent(c)
    magnitude = s.magnitude
    exponent = (1.0 / c - 1.0) if inverse else (c - 1.0)
    scale = np.zeros_like(magnitude)
    nonzero = magnitude > 0
    scale[nonzero] = magnitude[nonzero] ** exponent
    return Spectrogram(real=s.real * scale, imag=s.imag * scale, sample_rate=s.sample_rate, config=s.config)
