"""
Audio Data Models

CONCEPT: A Waveform is validated once, when it is built. Everything
downstream (DSP, metrics, degradation) can then trust that samples are a
finite, non-empty float64 vector with a positive sample rate.
"""

from enum import Enum
from pathlib import Path
from typing import Dict

import numpy as np
from pydantic import BaseModel, Field, field_validator


class Task(str, Enum):
    """The three enhancement tasks"""
    DENOISE = "denoise"
    DEREVERB = "dereverb"
    SUPERRES = "superres"


class Waveform(BaseModel):
    """
    Mono PCM signal

    VALIDATION:
    - samples: coerced to a 1-D float64 array, must be non-empty and finite
    - sample_rate: positive integer (Hz)
    """
    samples: np.ndarray = Field(..., description="Real amplitudes, nominal range [-1, 1]")
    sample_rate: int = Field(..., gt=0, description="Sample rate in Hz")

    class Config:
        arbitrary_types_allowed = True

    @field_validator("samples", mode="before")
    @classmethod
    def _as_finite_vector(cls, value) -> np.ndarray:
        samples = np.asarray(value, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be one-dimensional, got shape {samples.shape}")
        if samples.size == 0:
            raise ValueError("waveform must contain at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform samples must be finite")
        return samples

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        """Length in seconds"""
        return len(self) / self.sample_rate


class ManifestEntry(BaseModel):
    """One (clean, degraded) pair of a dataset manifest"""
    clean_path: Path = Field(..., description="Reference (clean) WAV file")
    degraded_path: Path = Field(..., description="Distorted WAV file")
    task: Task = Field(..., description="denoise, dereverb or superres")
    meta: Dict[str, str] = Field(default_factory=dict, description="snr_db, rir_id, scale, noise, ...")

    class Config:
        json_schema_extra = {
            "example": {
                "clean_path": "clean/p232_001.wav",
                "degraded_path": "degraded/p232_001.wav",
                "task": "denoise",
                "meta": {"snr_db": "5.0", "noise": "pink"}
            }
        }

    @property
    def track_id(self) -> str:
        """File stem shared by the clean and degraded tracks"""
        return self.degraded_path.stem
