"""
Objective Speech Metrics

CONCEPT: Intrusive metrics compare a processed signal x̂ against the clean
reference x. All of them are plain numpy/scipy functions of two arrays;
every framing constant comes from MetricConfig.

METRICS:
- snr       whole-signal SNR, +100 dB sentinel for identical inputs
- ssnr      segmental SNR, 32 ms rectangular frames, clamped [-10, 35] dB
- lsd       log-spectral distance on a 2048/512 Hanning STFT (base e or 10)
- llr       log-likelihood ratio of LPC models, clipped [0, 2], best 95% frames
- cd        LPC-cepstrum distance, clipped [0, 10], best 95% frames
- fwsegsnr  frequency-weighted segmental SNR over 25 mel-spaced Gaussian bands

The PESQ score is not computed here; it comes from a quality provider
(see cmgan.services.quality).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import librosa
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import linalg, signal

from cmgan.exceptions import ConfigError, DegenerateFrameError, QualityProviderError, ShapeError
from cmgan.models.audio import ManifestEntry, Waveform
from cmgan.models.metrics import MetricConfig
from cmgan.models.spectral import StftConfig
from cmgan.models.training import QualityKind, QualityScore
from cmgan.nn.losses import LLR_RANGE, normalize_quality
from cmgan.services.audio_io import read_wav
from cmgan.utils import dsp

logger = logging.getLogger(__name__)

Signal = Union[np.ndarray, Waveform]

DEFAULT_CONFIG = MetricConfig()


def _pair(x: Signal, y: Signal, sample_rate: int) -> Tuple[np.ndarray, np.ndarray, int]:
    if isinstance(x, Waveform):
        sample_rate = x.sample_rate
        x = x.samples
    if isinstance(y, Waveform):
        if y.sample_rate != sample_rate:
            raise ShapeError(f"sample rates differ: {sample_rate} vs {y.sample_rate}")
        y = y.samples
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"clean {x.shape} and processed {y.shape} must be equal-length vectors")
    return x, y, sample_rate


def _frames(x: np.ndarray, length: int, hop: int) -> np.ndarray:
    """Full frames only; a signal shorter than one frame is a single frame"""
    if x.size < length:
        return x[np.newaxis, :]
    return sliding_window_view(x, length)[::hop]


def _trimmed_mean(values: Sequence[float], keep_fraction: float) -> float:
    """Mean of the smallest ``keep_fraction`` share of the values"""
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    keep = max(1, int(math.floor(keep_fraction * ordered.size)))
    return float(ordered[:keep].mean())


# =============================================================================
# Waveform-domain SNRs
# =============================================================================

def snr(x: Signal, y: Signal, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """10·log10(Σx² / Σ(x−x̂)²) in dB"""
    x, y, _ = _pair(x, y, 0)
    error = float(np.sum((x - y) ** 2))
    power = float(np.sum(x ** 2))
    if error == 0.0:
        return cfg.snr_ceiling_db
    if power == 0.0:
        return -cfg.snr_ceiling_db
    return 10.0 * math.log10(power / error)


def ssnr(x: Signal, y: Signal, sample_rate: int = 16000, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Mean of frame SNRs clamped to [floor, ceil]; frames with a silent reference are skipped"""
    x, y, sample_rate = _pair(x, y, sample_rate)
    length = int(round(cfg.ssnr.frame_ms * sample_rate / 1000.0))
    hop = int(round(cfg.ssnr.hop_ms * sample_rate / 1000.0))
    clean = _frames(x, length, hop)
    error = clean - _frames(y, length, hop)

    power = np.sum(clean ** 2, axis=1)
    noise = np.sum(error ** 2, axis=1)
    active = power > 0
    if not np.any(active):
        return cfg.ssnr.ceil_db if not np.any(noise) else cfg.ssnr.floor_db

    with np.errstate(divide="ignore"):
        values = 10.0 * np.log10(power[active] / noise[active])
    values = np.clip(values, cfg.ssnr.floor_db, cfg.ssnr.ceil_db)
    return float(values.mean())


# =============================================================================
# Spectral distance
# =============================================================================

def lsd(x: Signal, y: Signal, base: str = "10", sample_rate: int = 16000, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Mean over frames of the RMS (over bins) log-power difference"""
    if base not in ("e", "10"):
        raise ConfigError(f"LSD base must be 'e' or '10', got {base!r}")
    x, y, sample_rate = _pair(x, y, sample_rate)
    stft_cfg = StftConfig(window_len=cfg.lsd.window_len, hop=cfg.lsd.hop, fft_size=cfg.lsd.window_len, window="hanning")
    log = np.log10 if base == "10" else np.log

    def log_power(samples: np.ndarray) -> np.ndarray:
        spec = dsp.stft(Waveform(samples=samples, sample_rate=sample_rate), stft_cfg)
        return log(np.maximum(spec.real ** 2 + spec.imag ** 2, cfg.lsd.power_floor))

    diff = log_power(x) - log_power(y)
    return float(np.mean(np.sqrt(np.mean(diff ** 2, axis=1))))


# =============================================================================
# LPC family
# =============================================================================

def autocorrelation(frame: np.ndarray, order: int) -> np.ndarray:
    """Biased autocorrelation r[0..order]"""
    full = signal.correlate(frame, frame, mode="full", method="direct")
    mid = frame.size - 1
    r = np.zeros(order + 1)
    lags = min(order, frame.size - 1)
    r[: lags + 1] = full[mid: mid + lags + 1]
    return r


def lpc(frame: np.ndarray, order: int) -> np.ndarray:
    """
    Autocorrelation-method LPC, A(z) = 1 + Σ a_k z^-k

    Returns:
        [1, a_1, ..., a_order]

    Raises:
        DegenerateFrameError: zero-energy frame or singular normal equations
    """
    frame = np.asarray(frame, dtype=np.float64)
    r = autocorrelation(frame, order)
    if r[0] <= 0.0:
        raise DegenerateFrameError("frame has zero energy")
    if order == 0:
        return np.ones(1)
    try:
        # scipy solves the Toeplitz system with the Levinson recursion
        a = linalg.solve_toeplitz(r[:order], -r[1: order + 1])
    except (linalg.LinAlgError, ValueError) as e:
        raise DegenerateFrameError(f"singular autocorrelation matrix: {str(e)}") from e
    if not np.all(np.isfinite(a)):
        raise DegenerateFrameError("non-finite LPC solution")
    return np.concatenate(([1.0], a))


def cepstrum_from_lpc(a: np.ndarray, n: int) -> np.ndarray:
    """
    Cepstrum c_1..c_n of the all-pole model 1/A(z)

    c_k = -a_k - Σ_{m=1}^{k-1} (m/k)·c_m·a_{k-m}, with a_k = 0 beyond the order
    """
    p = a.size - 1
    c = np.zeros(n + 1)
    for k in range(1, n + 1):
        acc = -a[k] if k <= p else 0.0
        for m in range(max(1, k - p), k):
            acc -= (m / k) * c[m] * a[k - m]
        c[k] = acc
    return c[1:]


def _lpc_frames(x: np.ndarray, y: np.ndarray, sample_rate: int, cfg: MetricConfig):
    cfg.check_lpc_order(sample_rate)
    length, hop = cfg.frame_length(sample_rate), cfg.frame_hop(sample_rate)
    window = signal.get_window("hann", length)
    clean = _frames(x, length, hop)
    processed = _frames(y, length, hop)
    if clean.shape[1] != length:
        window = signal.get_window("hann", clean.shape[1])
    return clean * window, processed * window


def llr(x: Signal, y: Signal, sample_rate: int = 16000, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """
    Log-likelihood ratio: ln(a_x̂ᵀ R_x a_x̂ / a_xᵀ R_x a_x) per frame

    Silent reference frames are skipped; a processed frame without an LPC
    model scores the upper clip value. Returns NaN when no frame is usable.
    """
    x, y, sample_rate = _pair(x, y, sample_rate)
    low, high = cfg.llr_clip
    values = []
    for clean, processed in zip(*_lpc_frames(x, y, sample_rate, cfg)):
        try:
            a_clean = lpc(clean, cfg.lpc_order)
        except DegenerateFrameError:
            continue
        try:
            a_proc = lpc(processed, cfg.lpc_order)
        except DegenerateFrameError:
            values.append(high)
            continue
        r = linalg.toeplitz(autocorrelation(clean, cfg.lpc_order))
        ratio = (a_proc @ r @ a_proc) / (a_clean @ r @ a_clean)
        values.append(float(np.clip(math.log(ratio) if ratio > 0 else high, low, high)))

    if not values:
        logger.warning("⚠️ LLR: reference has no analysable frames")
        return float("nan")
    return _trimmed_mean(values, cfg.keep_fraction)


def cd(x: Signal, y: Signal, sample_rate: int = 16000, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """Cepstral distance (10/ln10)·sqrt(2·Σ(c_x − c_x̂)²) over LPC cepstra, per frame"""
    x, y, sample_rate = _pair(x, y, sample_rate)
    low, high = cfg.cd_clip
    scale = 10.0 / math.log(10.0)
    values = []
    for clean, processed in zip(*_lpc_frames(x, y, sample_rate, cfg)):
        try:
            c_clean = cepstrum_from_lpc(lpc(clean, cfg.lpc_order), cfg.lpc_order)
        except DegenerateFrameError:
            continue
        try:
            c_proc = cepstrum_from_lpc(lpc(processed, cfg.lpc_order), cfg.lpc_order)
        except DegenerateFrameError:
            values.append(high)
            continue
        distance = scale * math.sqrt(2.0 * float(np.sum((c_clean - c_proc) ** 2)))
        values.append(float(np.clip(distance, low, high)))

    if not values:
        logger.warning("⚠️ CD: reference has no analysable frames")
        return float("nan")
    return _trimmed_mean(values, cfg.keep_fraction)


# =============================================================================
# Frequency-weighted segmental SNR
# =============================================================================

def gaussian_bands(sample_rate: int, nfft: int, cfg: MetricConfig = DEFAULT_CONFIG) -> np.ndarray:
    """
    [bands, nfft/2+1] filter bank

    Centres are mel-spaced from ``min_freq`` to Nyquist; each band is
    exp(-11·((f − f_c)/bw)²) with bw the spacing of neighbouring centres.
    """
    n_bands = cfg.fwsegsnr.num_bands
    centres = librosa.mel_frequencies(n_mels=n_bands + 2, fmin=cfg.fwsegsnr.min_freq, fmax=sample_rate / 2.0)
    widths = (centres[2:] - centres[:-2]) / 2.0
    centres = centres[1:-1]
    freqs = np.fft.rfftfreq(nfft, d=1.0 / sample_rate)
    return np.exp(-11.0 * ((freqs[np.newaxis, :] - centres[:, np.newaxis]) / widths[:, np.newaxis]) ** 2)


def fwsegsnr(x: Signal, y: Signal, sample_rate: int = 16000, cfg: MetricConfig = DEFAULT_CONFIG) -> float:
    """
    Σ_j W_j·SNR_j / Σ_j W_j per frame, W_j = |X_j|^γ, mean over frames

    Band magnitudes come from per-frame normalised magnitude spectra.
    Band and frame values are clamped to [floor, ceil].
    """
    x, y, sample_rate = _pair(x, y, sample_rate)
    floor, ceil = cfg.fwsegsnr.floor_db, cfg.fwsegsnr.ceil_db
    clean, processed = _lpc_frames(x, y, sample_rate, cfg)
    nfft = int(2 ** math.ceil(math.log2(max(clean.shape[1], 2))))
    bands = gaussian_bands(sample_rate, nfft, cfg)

    def band_magnitudes(frames: np.ndarray) -> np.ndarray:
        spec = np.abs(np.fft.rfft(frames, n=nfft, axis=1))
        total = spec.sum(axis=1, keepdims=True)
        spec = np.divide(spec, total, out=np.zeros_like(spec), where=total > 0)
        return spec @ bands.T

    clean_bands = band_magnitudes(clean)
    proc_bands = band_magnitudes(processed)
    values = []
    for xb, yb in zip(clean_bands, proc_bands):
        weights = xb ** cfg.fwsegsnr.weight_exponent
        if weights.sum() <= 0.0:
            continue
        error = (xb - yb) ** 2
        ratio = np.divide(xb ** 2, error, out=np.full_like(xb, np.inf), where=error > 0)
        with np.errstate(divide="ignore"):
            band_snr = np.clip(10.0 * np.log10(ratio), floor, ceil)
        values.append(float(np.clip(np.sum(weights * band_snr) / np.sum(weights), floor, ceil)))

    if not values:
        logger.warning("⚠️ FWSegSNR: reference has no analysable frames")
        return float("nan")
    return float(np.mean(values))


# =============================================================================
# Discriminator targets and batch evaluation
# =============================================================================

def quality_for_disc(
    clean: Signal,
    test: Signal,
    kind: QualityKind,
    provider=None,
    sample_rate: int = 16000,
    cfg: MetricConfig = DEFAULT_CONFIG,
) -> QualityScore:
    """
    Normalized discriminator target for one (clean, enhanced) pair

    llr is computed here; pesq needs a provider and never falls back to a default.
    """
    kind = QualityKind(kind)
    if kind == QualityKind.LLR:
        raw = llr(clean, test, sample_rate, cfg)
        if math.isnan(raw):
            raw = LLR_RANGE[1]
        return normalize_quality(raw, kind)
    if provider is None:
        raise QualityProviderError("pesq quality needs a provider (--pesq-provider)")
    x, y, sample_rate = _pair(clean, test, sample_rate)
    raw = provider.score(Waveform(samples=x, sample_rate=sample_rate), Waveform(samples=y, sample_rate=sample_rate))
    return normalize_quality(raw, kind)


def evaluate_pair(
    clean: Waveform,
    test: Waveform,
    names: Sequence[str],
    cfg: MetricConfig = DEFAULT_CONFIG,
    provider=None,
) -> Dict[str, float]:
    """Compute the named metrics for one pair of equal-rate, equal-length waveforms"""
    sr = clean.sample_rate
    if test.sample_rate != sr:
        raise ShapeError(f"sample rates differ: {sr} vs {test.sample_rate}")
    if len(test) != len(clean):
        raise ShapeError(f"lengths differ: {len(clean)} vs {len(test)}")
    x, y = clean.samples, test.samples

    results: Dict[str, float] = {}
    for name in names:
        if name == "snr":
            results[name] = snr(x, y, cfg)
        elif name == "ssnr":
            results[name] = ssnr(x, y, sr, cfg)
        elif name in ("lsd_e", "lsd_10"):
            results[name] = lsd(x, y, name.split("_")[1], sr, cfg)
        elif name == "llr":
            results[name] = llr(x, y, sr, cfg)
        elif name == "cd":
            results[name] = cd(x, y, sr, cfg)
        elif name == "fwsegsnr":
            results[name] = fwsegsnr(x, y, sr, cfg)
        elif name == "pesq":
            if provider is None:
                raise QualityProviderError("the pesq metric needs a provider (--pesq-provider)")
            results[name] = provider.score(clean, test)
        else:
            raise ConfigError(f"unknown metric {name!r}")
    return results


class MetricEvaluator:
    """
    Scores every track of a manifest

    DESIGN PATTERN: per-track work is independent, so it fans out over a
    thread pool; results keep manifest order.
    """

    def __init__(self, names: Sequence[str], cfg: MetricConfig = DEFAULT_CONFIG, provider=None, num_workers: int = 1):
        self.names = list(names)
        self.cfg = cfg
        self.provider = provider
        self.num_workers = num_workers

    def score_entry(self, entry: ManifestEntry, test_path: Optional[Path] = None) -> Dict[str, float]:
        clean = read_wav(entry.clean_path)
        test = read_wav(test_path or entry.degraded_path)
        return evaluate_pair(clean, test, self.names, self.cfg, self.provider)

    def evaluate(self, entries: Sequence[ManifestEntry], enhanced_dir: Optional[Path] = None) -> List[Dict[str, float]]:
        """
        Args:
            entries: manifest entries
            enhanced_dir: score ``enhanced_dir/<degraded file name>`` instead of the degraded file

        Returns:
            One dict per entry, in manifest order
        """
        def job(entry: ManifestEntry) -> Dict[str, float]:
            test_path = Path(enhanced_dir) / entry.degraded_path.name if enhanced_dir else None
            return self.score_entry(entry, test_path)

        logger.info(f"📊 Scoring {len(entries)} tracks on {', '.join(self.names)}")
        if self.num_workers <= 1:
            return [job(entry) for entry in entries]
        with ThreadPoolExecutor(max_workers=self.num_workers) as pool:
            return list(pool.map(job, entries))

    @staticmethod
    def summarize(rows: Sequence[Dict[str, float]]) -> Dict[str, float]:
        """Per-metric mean, ignoring NaN"""
        if not rows:
            return {}
        return {name: float(np.nanmean([row[name] for row in rows])) for name in rows[0]}
