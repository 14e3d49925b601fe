"""
Reference Metric Oracles

CONCEPT: Second implementations of every objective metric, written as
plain loops over frames straight from the formulas. They share no code
with cmgan.services.metrics (own framing, own windows, own Levinson
recursion, own mel scale), so agreement between the two is evidence that
both are right. Slow; used by selfcheck and the tests only.
"""

import math
from typing import Dict, List

import numpy as np

from cmgan.models.metrics import MetricConfig

ORACLE_METRICS = ("snr", "ssnr", "lsd_e", "lsd_10", "llr", "cd", "fwsegsnr")


def _frame_starts(n: int, length: int, hop: int) -> List[int]:
    if n < length:
        return [0]
    return list(range(0, n - length + 1, hop))


def _hann(length: int) -> np.ndarray:
    # periodic Hann
    return np.array([0.5 - 0.5 * math.cos(2.0 * math.pi * k / length) for k in range(length)])


def _best_share_mean(values: List[float], keep_fraction: float) -> float:
    ordered = sorted(values)
    keep = max(1, int(keep_fraction * len(ordered)))
    return math.fsum(ordered[:keep]) / keep


def snr_oracle(x: np.ndarray, y: np.ndarray, cfg: MetricConfig) -> float:
    signal_energy = math.fsum(float(v) ** 2 for v in x)
    error_energy = math.fsum(float(a - b) ** 2 for a, b in zip(x, y))
    if error_energy == 0.0:
        return cfg.snr_ceiling_db
    if signal_energy == 0.0:
        return -cfg.snr_ceiling_db
    return 10.0 * math.log10(signal_energy / error_energy)


def ssnr_oracle(x: np.ndarray, y: np.ndarray, sample_rate: int, cfg: MetricConfig) -> float:
    length = int(round(cfg.ssnr.frame_ms * sample_rate / 1000.0))
    hop = int(round(cfg.ssnr.hop_ms * sample_rate / 1000.0))
    values = []
    any_error = False
    for start in _frame_starts(x.size, length, hop):
        seg_x = x[start:start + length]
        seg_y = y[start:start + length]
        power = float(np.dot(seg_x, seg_x))
        any_error = any_error or bool(np.any(seg_x != seg_y))
        if power == 0.0:
            continue
        noise = float(np.dot(seg_x - seg_y, seg_x - seg_y))
        value = cfg.ssnr.ceil_db if noise == 0.0 else 10.0 * math.log10(power / noise)
        values.append(min(max(value, cfg.ssnr.floor_db), cfg.ssnr.ceil_db))
    if not values:
        return cfg.ssnr.floor_db if any_error else cfg.ssnr.ceil_db
    return math.fsum(values) / len(values)


def lsd_oracle(x: np.ndarray, y: np.ndarray, base: str, cfg: MetricConfig) -> float:
    n_fft, hop = cfg.lsd.window_len, cfg.lsd.hop
    half = n_fft // 2
    window = _hann(n_fft)
    mode = "reflect" if x.size > half else "constant"
    log = math.log10 if base == "10" else math.log

    def log_power(sig: np.ndarray) -> np.ndarray:
        padded = np.pad(sig, half, mode=mode)
        rows = []
        for t in range(sig.size // hop + 1):
            spec = np.fft.rfft(padded[t * hop:t * hop + n_fft] * window)
            power = spec.real ** 2 + spec.imag ** 2
            rows.append([log(max(p, cfg.lsd.power_floor)) for p in power])
        return np.array(rows)

    diff = log_power(x) - log_power(y)
    per_frame = [math.sqrt(float(np.mean(row ** 2))) for row in diff]
    return math.fsum(per_frame) / len(per_frame)


def _autocorr(frame: np.ndarray, order: int) -> np.ndarray:
    return np.array([float(np.dot(frame[: frame.size - k], frame[k:])) if k < frame.size else 0.0
                     for k in range(order + 1)])


def _levinson(r: np.ndarray, order: int) -> np.ndarray:
    """Levinson-Durbin recursion; returns [1, a_1..a_p] or None when singular"""
    a = np.zeros(order + 1)
    a[0] = 1.0
    error = r[0]
    for i in range(1, order + 1):
        if error <= 0.0:
            return None
        k = -(r[i] + sum(a[j] * r[i - j] for j in range(1, i))) / error
        previous = a.copy()
        for j in range(1, i):
            a[j] = previous[j] + k * previous[i - j]
        a[i] = k
        error *= 1.0 - k * k
    return a


def _lpc_frames(x: np.ndarray, y: np.ndarray, sample_rate: int, cfg: MetricConfig):
    length = int(round(cfg.frames.frame_ms * sample_rate / 1000.0))
    hop = max(1, int(round(length * (1.0 - cfg.frames.overlap))))
    starts = _frame_starts(x.size, length, hop)
    length = min(length, x.size)
    window = _hann(length)
    for start in starts:
        yield x[start:start + length] * window, y[start:start + length] * window


def _lpc_or_none(frame: np.ndarray, order: int):
    r = _autocorr(frame, order)
    if r[0] <= 0.0:
        return None, r
    return _levinson(r, order), r


def llr_oracle(x: np.ndarray, y: np.ndarray, sample_rate: int, cfg: MetricConfig) -> float:
    low, high = cfg.llr_clip
    p = cfg.lpc_order
    values = []
    for fx, fy in _lpc_frames(x, y, sample_rate, cfg):
        a_x, r_x = _lpc_or_none(fx, p)
        if a_x is None:
            continue
        a_y, _ = _lpc_or_none(fy, p)
        if a_y is None:
            values.append(high)
            continue
        matrix = np.array([[r_x[abs(i - j)] for j in range(p + 1)] for i in range(p + 1)])
        ratio = float(a_y @ matrix @ a_y) / float(a_x @ matrix @ a_x)
        value = math.log(ratio) if ratio > 0 else high
        values.append(min(max(value, low), high))
    return _best_share_mean(values, cfg.keep_fraction) if values else float("nan")


def _lpc_cepstrum(a: np.ndarray, n: int) -> List[float]:
    p = a.size - 1
    c = [0.0] * (n + 1)
    for k in range(1, n + 1):
        total = -a[k] if k <= p else 0.0
        for m in range(1, k):
            if k - m <= p:
                total -= (m / k) * c[m] * a[k - m]
        c[k] = total
    return c[1:]


def cd_oracle(x: np.ndarray, y: np.ndarray, sample_rate: int, cfg: MetricConfig) -> float:
    low, high = cfg.cd_clip
    p = cfg.lpc_order
    values = []
    for fx, fy in _lpc_frames(x, y, sample_rate, cfg):
        a_x, _ = _lpc_or_none(fx, p)
        if a_x is None:
            continue
        a_y, _ = _lpc_or_none(fy, p)
        if a_y is None:
            values.append(high)
            continue
        cx, cy = _lpc_cepstrum(a_x, p), _lpc_cepstrum(a_y, p)
        distance = (10.0 / math.log(10.0)) * math.sqrt(2.0 * math.fsum((u - v) ** 2 for u, v in zip(cx, cy)))
        values.append(min(max(distance, low), high))
    return _best_share_mean(values, cfg.keep_fraction) if values else float("nan")


def _hz_to_mel(f: float) -> float:
    # Slaney scale: linear to 1 kHz, logarithmic above
    f_sp, min_log_hz = 200.0 / 3.0, 1000.0
    if f < min_log_hz:
        return f / f_sp
    return min_log_hz / f_sp + math.log(f / min_log_hz) / (math.log(6.4) / 27.0)


def _mel_to_hz(m: float) -> float:
    f_sp, min_log_hz = 200.0 / 3.0, 1000.0
    min_log_mel = min_log_hz / f_sp
    if m < min_log_mel:
        return m * f_sp
    return min_log_hz * math.exp((math.log(6.4) / 27.0) * (m - min_log_mel))


def fwsegsnr_oracle(x: np.ndarray, y: np.ndarray, sample_rate: int, cfg: MetricConfig) -> float:
    fw = cfg.fwsegsnr
    low_mel, high_mel = _hz_to_mel(fw.min_freq), _hz_to_mel(sample_rate / 2.0)
    count = fw.num_bands + 2
    edges = [_mel_to_hz(low_mel + (high_mel - low_mel) * k / (count - 1)) for k in range(count)]

    frames = list(_lpc_frames(x, y, sample_rate, cfg))
    nfft = 1
    while nfft < max(frames[0][0].size, 2):
        nfft *= 2
    freqs = [k * sample_rate / nfft for k in range(nfft // 2 + 1)]
    bands = [[math.exp(-11.0 * ((f - edges[j]) / ((edges[j + 1] - edges[j - 1]) / 2.0)) ** 2) for f in freqs]
             for j in range(1, count - 1)]

    def band_values(frame: np.ndarray) -> List[float]:
        spec = np.abs(np.fft.rfft(frame, n=nfft))
        total = float(spec.sum())
        spec = spec / total if total > 0 else np.zeros_like(spec)
        return [float(np.dot(spec, band)) for band in bands]

    values = []
    for fx, fy in frames:
        xb, yb = band_values(fx), band_values(fy)
        weights = [v ** fw.weight_exponent for v in xb]
        if math.fsum(weights) <= 0.0:
            continue
        numerator = 0.0
        for w, cx, cy in zip(weights, xb, yb):
            error = (cx - cy) ** 2
            band_snr = fw.ceil_db if error == 0.0 else (
                fw.floor_db if cx == 0.0 else 10.0 * math.log10(cx * cx / error)
            )
            numerator += w * min(max(band_snr, fw.floor_db), fw.ceil_db)
        values.append(min(max(numerator / math.fsum(weights), fw.floor_db), fw.ceil_db))
    return math.fsum(values) / len(values) if values else float("nan")


def oracle_values(x: np.ndarray, y: np.ndarray, sample_rate: int, cfg: MetricConfig) -> Dict[str, float]:
    """Every oracle on one pair, keyed like the evaluate command's metric names"""
    return {
        "snr": snr_oracle(x, y, cfg),
        "ssnr": ssnr_oracle(x, y, sample_rate, cfg),
        "lsd_e": lsd_oracle(x, y, "e", cfg),
        "lsd_10": lsd_oracle(x, y, "10", cfg),
        "llr": llr_oracle(x, y, sample_rate, cfg),
        "cd": cd_oracle(x, y, sample_rate, cfg),
        "fwsegsnr": fwsegsnr_oracle(x, y, sample_rate, cfg),
    }
