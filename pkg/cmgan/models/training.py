"""Training data models: loss weights, quality scores, schedule, optimizer state, loss reports"""

from enum import Enum
from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from cmgan.models.audio import Task


class QualityKind(str, Enum):
    """
    Source of the discriminator target

    - pesq: higher is better, clean target 1
    - llr: lower is better, clean target 0
    """
    PESQ = "pesq"
    LLR = "llr"

    @property
    def clean_target(self) -> float:
        return 1.0 if self == QualityKind.PESQ else 0.0


class QualityScore(BaseModel):
    """Normalized quality in [0, 1]"""
    value: float = Field(..., ge=0.0, le=1.0)
    kind: QualityKind

    class Config:
        frozen = True


class LossWeights(BaseModel):
    """Weights of the TF loss (alpha) and of the total generator loss (gammas)"""
    alpha: float = Field(0.7, ge=0.0, le=1.0, description="Magnitude share of the TF loss")
    gamma1: float = Field(1.0, ge=0.0, description="TF loss weight")
    gamma2: float = Field(0.01, ge=0.0, description="Adversarial loss weight")
    gamma3: float = Field(1.0, ge=0.0, description="Time loss weight")


class TrainConfig(BaseModel):
    """
    Training schedule

    Defaults: 50 epochs, B=4, 2 s slices, AdamW at 5e-4 (generator) and
    1e-3 (discriminator), halved every 12 epochs.
    """
    epochs: int = Field(50, gt=0)
    batch_size: int = Field(4, gt=0)
    slice_seconds: float = Field(2.0, gt=0.0)
    lr_gen: float = Field(5e-4, gt=0.0)
    lr_disc: float = Field(1e-3, gt=0.0)
    lr_decay_factor: float = Field(0.5, gt=0.0, le=1.0)
    lr_decay_every: int = Field(12, gt=0, description="Epochs between decays")
    betas: Tuple[float, float] = Field((0.9, 0.999))
    eps: float = Field(1e-8, gt=0.0)
    weight_decay: float = Field(0.01, ge=0.0)
    grad_clip: Optional[float] = Field(None, gt=0.0, description="Global norm; None disables clipping")
    seed: int = Field(0)
    quality: QualityKind = Field(QualityKind.PESQ)
    task: Task = Field(Task.DENOISE)
    sample_rate: int = Field(16000, gt=0)
    hop: int = Field(100, gt=0)
    loss_weights: LossWeights = Field(default_factory=LossWeights)

    @model_validator(mode="after")
    def _check_slice(self) -> "TrainConfig":
        if self.slice_seconds * self.sample_rate < self.hop:
            raise ValueError("slice must span at least one hop")
        return self

    @property
    def slice_samples(self) -> int:
        return int(round(self.slice_seconds * self.sample_rate))


class OptimizerState(BaseModel):
    """AdamW state: moments live in ``state_dict`` keyed like torch's optimizer"""
    step: int = Field(0, ge=0)
    weight_decay: float = Field(0.01, ge=0.0)
    state_dict: Dict[str, Any] = Field(default_factory=dict)

    class Config:
        arbitrary_types_allowed = True


class LossReport(BaseModel):
    """Per-component losses of one training step"""
    step: int
    epoch: int
    lr_gen: float
    lr_disc: float
    tf_loss: float
    gan_loss: float
    time_loss: float
    gen_loss: float
    disc_loss: float
    quality: float = Field(..., description="Mean normalized quality of the enhanced batch")
    wall_time: float = Field(0.0, description="Seconds since the run started")

    def csv_row(self) -> Dict[str, Any]:
        return self.model_dump()
