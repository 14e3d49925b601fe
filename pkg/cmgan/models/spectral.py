"""Time-frequency data models: STFT configuration, spectrogram, packed generator input"""

from typing import Literal

import numpy as np
import torch
from pydantic import BaseModel, Field, field_validator, model_validator


class StftConfig(BaseModel):
    """
    Analysis/synthesis parameters

    Defaults are the 16 kHz setup: 25 ms Hamming window, 400-point FFT,
    6.25 ms hop (75% overlap).
    """
    window_len: int = Field(400, gt=0, description="Window length in samples")
    hop: int = Field(100, gt=0, description="Hop size in samples")
    fft_size: int = Field(400, gt=0, description="FFT length in samples")
    window: Literal["hamming", "hanning"] = Field("hamming", description="Window family")
    center: bool = Field(True, description="Reflect-pad window_len/2 at both ends")

    class Config:
        frozen = True

    @model_validator(mode="after")
    def _check_ordering(self) -> "StftConfig":
        if not self.hop <= self.window_len <= self.fft_size:
            raise ValueError(
                f"need hop <= window_len <= fft_size, got {self.hop}, {self.window_len}, {self.fft_size}"
            )
        return self

    @property
    def freq_bins(self) -> int:
        return self.fft_size // 2 + 1

    def num_frames(self, num_samples: int) -> int:
        """Frame count for a signal of ``num_samples`` samples"""
        if self.center:
            return num_samples // self.hop + 1
        return max(0, (num_samples - self.fft_size) // self.hop + 1)


class Spectrogram(BaseModel):
    """
    Complex T×F grid

    Holds Y_r and Y_i; magnitude and phase are derived on demand so the
    two views can never drift apart.
    """
    real: np.ndarray = Field(..., description="T×F real part")
    imag: np.ndarray = Field(..., description="T×F imaginary part")
    sample_rate: int = Field(..., gt=0)
    config: StftConfig = Field(default_factory=StftConfig)

    class Config:
        arbitrary_types_allowed = True

    @field_validator("real", "imag", mode="before")
    @classmethod
    def _as_grid(cls, value) -> np.ndarray:
        grid = np.asarray(value, dtype=np.float64)
        if grid.ndim != 2:
            raise ValueError(f"spectrogram parts must be T×F, got shape {grid.shape}")
        if not np.all(np.isfinite(grid)):
            raise ValueError("spectrogram entries must be finite")
        return grid

    @model_validator(mode="after")
    def _check_shape(self) -> "Spectrogram":
        if self.real.shape != self.imag.shape:
            raise ValueError(f"real {self.real.shape} and imag {self.imag.shape} differ")
        if self.real.shape[1] != self.config.freq_bins:
            raise ValueError(
                f"expected {self.config.freq_bins} frequency bins, got {self.real.shape[1]}"
            )
        return self

    @property
    def shape(self):
        return self.real.shape

    @property
    def magnitude(self) -> np.ndarray:
        return np.hypot(self.real, self.imag)

    @property
    def phase(self) -> np.ndarray:
        return np.arctan2(self.imag, self.real)

    def to_complex(self) -> np.ndarray:
        return self.real + 1j * self.imag


class PackedInput(BaseModel):
    """
    Generator input: B×T×F×3 ordered (magnitude, real, imaginary)

    Kept in float64; ``to_tensor`` is the single-precision boundary.
    """
    tensor: np.ndarray = Field(..., description="B×T×F×3 grid")

    class Config:
        arbitrary_types_allowed = True

    @field_validator("tensor", mode="before")
    @classmethod
    def _check_layout(cls, value) -> np.ndarray:
        grid = np.asarray(value, dtype=np.float64)
        if grid.ndim != 4 or grid.shape[-1] != 3:
            raise ValueError(f"packed input must be B×T×F×3, got shape {grid.shape}")
        magnitude = np.hypot(grid[..., 1], grid[..., 2])
        if not np.allclose(grid[..., 0], magnitude, rtol=0.0, atol=1e-6):
            raise ValueError("channel 0 must equal sqrt(real² + imag²)")
        return grid

    def to_tensor(self, dtype: torch.dtype = torch.float32) -> torch.Tensor:
        return torch.from_numpy(self.tensor).to(dtype)
