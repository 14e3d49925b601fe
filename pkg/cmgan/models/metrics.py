"""
Metric Configuration

CONCEPT: Every constant that an objective metric depends on lives here, so
a convention can be re-pinned without touching the metric code.
"""

from typing import Literal, Tuple

from pydantic import BaseModel, Field, model_validator


class SsnrConfig(BaseModel):
    """Segmental SNR: 32 ms rectangular frames, 50% overlap, clamped to [-10, 35] dB"""
    frame_ms: float = Field(32.0, gt=0.0)
    hop_ms: float = Field(16.0, gt=0.0)
    floor_db: float = Field(-10.0)
    ceil_db: float = Field(35.0)


class LsdConfig(BaseModel):
    """Log-spectral distance on a 2048/512 Hanning STFT of power spectra"""
    window_len: int = Field(2048, gt=0)
    hop: int = Field(512, gt=0)
    base: Literal["e", "10"] = Field("10")
    power_floor: float = Field(1e-10, gt=0.0)


class LpcFrameConfig(BaseModel):
    """Framing shared by LLR, CD and FWSegSNR: 30 ms Hanning windows, 75% overlap"""
    frame_ms: float = Field(30.0, gt=0.0)
    overlap: float = Field(0.75, ge=0.0, lt=1.0)


class FwSegSnrConfig(BaseModel):
    """Frequency-weighted segmental SNR over mel-spaced Gaussian bands"""
    num_bands: int = Field(25, gt=0)
    weight_exponent: float = Field(0.2, gt=0.0)
    min_freq: float = Field(50.0, ge=0.0)
    floor_db: float = Field(-10.0)
    ceil_db: float = Field(35.0)


class MetricConfig(BaseModel):
    """All objective-metric constants"""
    snr_ceiling_db: float = Field(100.0, description="Returned when the error is exactly zero")
    ssnr: SsnrConfig = Field(default_factory=SsnrConfig)
    lsd: LsdConfig = Field(default_factory=LsdConfig)
    frames: LpcFrameConfig = Field(default_factory=LpcFrameConfig)
    lpc_order: int = Field(16, ge=0)
    llr_clip: Tuple[float, float] = Field((0.0, 2.0))
    cd_clip: Tuple[float, float] = Field((0.0, 10.0))
    keep_fraction: float = Field(0.95, gt=0.0, le=1.0, description="Best share of frames kept by LLR and CD")
    fwsegsnr: FwSegSnrConfig = Field(default_factory=FwSegSnrConfig)

    @model_validator(mode="after")
    def _check_ranges(self) -> "MetricConfig":
        for name, (low, high) in (("llr_clip", self.llr_clip), ("cd_clip", self.cd_clip)):
            if not low < high:
                raise ValueError(f"{name} must satisfy low < high, got ({low}, {high})")
        for name, cfg in (("ssnr", self.ssnr), ("fwsegsnr", self.fwsegsnr)):
            if not cfg.floor_db < cfg.ceil_db:
                raise ValueError(f"{name} floor must be below its ceiling")
        return self

    def frame_length(self, sample_rate: int) -> int:
        return int(round(self.frames.frame_ms * sample_rate / 1000.0))

    def frame_hop(self, sample_rate: int) -> int:
        return max(1, int(round(self.frame_length(sample_rate) * (1.0 - self.frames.overlap))))

    def check_lpc_order(self, sample_rate: int) -> None:
        if self.lpc_order >= self.frame_length(sample_rate):
            raise ValueError(
                f"lpc_order={self.lpc_order} must be below the frame length {self.frame_length(sample_rate)}"
            )
