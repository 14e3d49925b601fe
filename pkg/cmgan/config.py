"""
Configuration Management using Pydantic Settings

CONCEPT: One typed settings object feeds every command.
- Reads CMGAN_* environment variables
- Reads a plain KEY=VALUE config file (see docs/CONFIG_FORMAT.md)
- Validates types and ranges
- CLI flags are passed as init kwargs, so they win over everything else

PRECEDENCE: flags > environment > config file > defaults
"""

from pathlib import Path
from typing import List, Optional

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings

from cmgan.models.audio import Task
from cmgan.models.degrade import DegradeSpec
from cmgan.models.metrics import MetricConfig
from cmgan.models.network import DiscriminatorConfig, GeneratorConfig
from cmgan.models.training import LossWeights, QualityKind, TrainConfig

KNOWN_METRICS = ("snr", "ssnr", "lsd_e", "lsd_10", "llr", "cd", "fwsegsnr", "pesq")


def _split(value: str) -> List[str]:
    """KEY=a,b,c in the config file"""
    return [item.strip() for item in value.split(",") if item.strip()]


class Settings(BaseSettings):
    """
    Run-wide configuration schema

    Inherits from BaseSettings which:
    1. Reads from environment variables (prefix CMGAN_)
    2. Reads from the config file given as ``_env_file``
    3. Validates types automatically
    """

    # Application Settings
    log_level: str = "INFO"
    seed: int = 0

    # Task
    task: Task = Task.DENOISE
    sample_rate: int = 16000

    # Degradation
    snr: Optional[str] = None  # "0,5,10,15"; None → split default
    split: str = "train"
    noise: Optional[str] = None  # "white,pink"
    scale: int = 2
    t60: Optional[str] = None  # "low,high" seconds, or one value
    reverb_noise_snr: Optional[float] = None

    # Model size (paper: C=64, N=4)
    channels: int = Field(64, ge=4)
    blocks: int = Field(4, ge=0)

    # Training
    epochs: int = Field(50, gt=0)
    batch: int = Field(4, gt=0)
    slice_seconds: float = 2.0
    lr_gen: float = 5e-4
    lr_disc: float = 1e-3
    grad_clip: Optional[float] = None
    quality: QualityKind = QualityKind.PESQ
    pesq_provider: Optional[str] = None  # executable path or http(s) URL

    # Evaluation
    metrics: str = "snr,ssnr,lsd_e,lsd_10,llr,cd,fwsegsnr"

    # Parallelism for per-track work
    num_workers: int = Field(1, ge=1)

    class Config:
        """
        CONCEPT: Nested Config class tells Pydantic where to find values
        """
        env_prefix = "CMGAN_"
        env_file = None  # the CLI passes --config as _env_file
        case_sensitive = False

    @field_validator("log_level")
    @classmethod
    def _upper_level(cls, value: str) -> str:
        return value.upper()

    @field_validator("metrics")
    @classmethod
    def _known_metrics(cls, value: str) -> str:
        unknown = [name for name in _split(value) if name not in KNOWN_METRICS]
        if unknown:
            raise ValueError(f"unknown metric(s) {unknown}; choose from {list(KNOWN_METRICS)}")
        return value

    @property
    def metric_names(self) -> List[str]:
        return _split(self.metrics)

    # ------------------------------------------------------------------
    # Per-concern views
    # ------------------------------------------------------------------

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(channels=self.channels, num_blocks=self.blocks, task=self.task)

    def discriminator_config(self) -> DiscriminatorConfig:
        return DiscriminatorConfig()

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch,
            slice_seconds=self.slice_seconds,
            lr_gen=self.lr_gen,
            lr_disc=self.lr_disc,
            grad_clip=self.grad_clip,
            seed=self.seed,
            quality=self.quality,
            task=self.task,
            sample_rate=self.sample_rate,
            loss_weights=LossWeights(),
        )

    def degrade_spec(self) -> DegradeSpec:
        fields = {"task": self.task, "split": self.split, "scale": self.scale, "sample_rate": self.sample_rate}
        if self.snr:
            fields["snr_db"] = [float(value) for value in _split(self.snr)]
        if self.noise:
            fields["noise_kinds"] = _split(self.noise)
        if self.t60:
            bounds = [float(value) for value in _split(self.t60)]
            fields["t60_range"] = (bounds[0], bounds[-1])
        if self.reverb_noise_snr is not None:
            fields["reverb_noise_snr_db"] = self.reverb_noise_snr
        return DegradeSpec(**fields)

    def metric_config(self) -> MetricConfig:
        return MetricConfig()


def load_settings(config_file: Optional[Path] = None, **overrides) -> Settings:
    """
    Build settings with CLI overrides on top

    ``None`` overrides are dropped so an absent flag never masks the file.
    """
    flags = {key: value for key, value in overrides.items() if value is not None}
    return Settings(_env_file=config_file, **flags)

