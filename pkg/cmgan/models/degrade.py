"""Degradation recipe model: which distortion, at which strengths"""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from cmgan.models.audio import Task

TRAIN_SNRS = [0.0, 5.0, 10.0, 15.0]
TEST_SNRS = [2.5, 7.5, 12.5, 17.5]

NoiseKind = Literal["white", "pink", "babble", "doorbell"]


class DegradeSpec(BaseModel):
    """
    Recipe for one synthetic dataset

    RULES:
    - denoise: snr_db list (defaults to the split's list) and noise kinds
    - dereverb: t60 range in seconds, optional stationary noise on top
    - superres: integer scale s >= 2
    """
    task: Task
    split: Literal["train", "test"] = Field("train")
    snr_db: Optional[List[float]] = Field(None, description="Defaults to the split's SNR list")
    noise_kinds: List[NoiseKind] = Field(default_factory=lambda: ["white", "pink", "babble", "doorbell"])
    t60_range: Tuple[float, float] = Field((0.3, 0.7), description="Synthetic RIR decay time range (s)")
    reverb_noise_snr_db: Optional[float] = Field(None, description="Stationary noise added after reverb")
    scale: int = Field(2, ge=2, description="Upscaling ratio s")
    sample_rate: int = Field(16000, gt=0)

    class Config:
        json_schema_extra = {"example": {"task": "denoise", "split": "train", "snr_db": [0, 5, 10, 15]}}

    @model_validator(mode="after")
    def _check_task_fields(self) -> "DegradeSpec":
        if self.task == Task.DENOISE and not self.noise_kinds:
            raise ValueError("denoise needs at least one noise kind")
        if self.task == Task.DEREVERB:
            low, high = self.t60_range
            if not 0.0 < low <= high:
                raise ValueError(f"t60_range must satisfy 0 < low <= high, got {self.t60_range}")
        if self.task == Task.SUPERRES and self.sample_rate % self.scale:
            raise ValueError(f"sample_rate {self.sample_rate} is not divisible by scale {self.scale}")
        return self

    @property
    def snr_choices(self) -> List[float]:
        if self.snr_db:
            return list(self.snr_db)
        return list(TRAIN_SNRS if self.split == "train" else TEST_SNRS)
