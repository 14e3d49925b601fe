"""
Network Configuration Models

CONCEPT: One schema per network. Defaults reproduce the published
architecture (C=64, N=4, F=201, discriminator channels 16-32-64-128) and
the validators enforce the few rules that keep the shapes composable.
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from cmgan.models.audio import Task


class MaskMode(str, Enum):
    """How the mask decoder output meets the input magnitude"""
    MULTIPLY = "multiply"
    ADD = "add"


class MaskActivation(str, Enum):
    """Final activation of the mask decoder"""
    PRELU = "prelu"
    SIGMOID = "sigmoid"
    RELU = "relu"
    SOFTPLUS = "softplus"


class DecoderMode(str, Enum):
    """Which decoder paths are built"""
    MASK_COMPLEX = "mask_complex"
    MASK_ONLY = "mask_only"
    COMPLEX_ONLY = "complex_only"


def mask_mode_for(task: Task) -> MaskMode:
    """Super-resolution adds an offset; the other tasks multiply a mask"""
    return MaskMode.ADD if task == Task.SUPERRES else MaskMode.MULTIPLY


class LayerSpec(BaseModel):
    """Hyperparameters of a single layer"""
    kernel: Tuple[int, int] = Field((1, 1), description="(time, frequency) kernel")
    stride: Tuple[int, int] = Field((1, 1), description="(time, frequency) stride")
    channels: int = Field(..., gt=0, description="Output channels")
    dilation: Tuple[int, int] = Field((1, 1), description="(time, frequency) dilation")
    padding: Tuple[int, int] = Field((0, 0), description="Symmetric (time, frequency) zero padding")

    class Config:
        frozen = True

    def describe(self, with_dilation: bool = False) -> str:
        """Table notation: ``k_t×k_f, (s_t,s_f), C[, d]``"""
        text = f"{self.kernel[0]}×{self.kernel[1]}, ({self.stride[0]},{self.stride[1]}), {self.channels}"
        if with_dilation:
            text += f", {self.dilation[0]}"
        return text


class GeneratorConfig(BaseModel):
    """
    Generator hyperparameters

    RULES:
    - channels C >= 4, even and divisible by the head count
    - mask_mode follows the task when a task is given
    """
    channels: int = Field(64, ge=4, description="Feature channels C")
    num_blocks: int = Field(4, ge=0, description="Two-stage conformer blocks N")
    freq_bins: int = Field(201, ge=3, description="Frequency bins F (odd)")
    task: Optional[Task] = Field(None, description="Task the weights are trained for")
    mask_mode: MaskMode = Field(MaskMode.MULTIPLY)
    mask_activation: MaskActivation = Field(MaskActivation.PRELU)
    decoder_mode: DecoderMode = Field(DecoderMode.MASK_COMPLEX)
    heads: int = Field(4, gt=0, description="Attention heads")
    ff_mult: int = Field(4, gt=0, description="Feed-forward expansion factor")
    conv_expansion: int = Field(2, gt=0, description="Conformer convolution expansion factor")
    conv_kernel: int = Field(31, gt=0, description="Depthwise kernel size (odd)")
    dilations: List[int] = Field(default_factory=lambda: [1, 2, 4, 8])
    dropout: float = Field(0.2, ge=0.0, lt=1.0)
    prelu_init: float = Field(0.2, description="Initial PReLU slope")
    compress_exponent: float = Field(0.3, gt=0.0, le=1.0, description="Power-law exponent c")

    class Config:
        json_schema_extra = {
            "example": {"channels": 64, "num_blocks": 4, "freq_bins": 201, "task": "denoise"}
        }

    @model_validator(mode="before")
    @classmethod
    def _default_mask_mode(cls, data):
        if isinstance(data, dict) and data.get("task") is not None and data.get("mask_mode") is None:
            data = dict(data)
            data["mask_mode"] = mask_mode_for(Task(data["task"]))
        return data

    @model_validator(mode="after")
    def _check_rules(self) -> "GeneratorConfig":
        if self.channels % 2 or self.channels % self.heads:
            raise ValueError(f"channels={self.channels} must be even and divisible by heads={self.heads}")
        if self.freq_bins % 2 == 0:
            raise ValueError(f"freq_bins={self.freq_bins} must be odd (fft_size/2 + 1)")
        if self.conv_kernel % 2 == 0:
            raise ValueError(f"conv_kernel={self.conv_kernel} must be odd")
        if self.task is not None and self.mask_mode != mask_mode_for(self.task):
            raise ValueError(f"mask_mode={self.mask_mode.value} does not fit task={self.task.value}")
        return self

    @property
    def reduced_bins(self) -> int:
        """F' after the frequency-halving encoder convolution"""
        return (self.freq_bins - 1) // 2 + 1


class DiscriminatorConfig(BaseModel):
    """Metric discriminator hyperparameters"""
    channels: List[int] = Field(default_factory=lambda: [16, 32, 64, 128])
    kernel: Tuple[int, int] = Field((4, 4))
    stride: Tuple[int, int] = Field((2, 2))
    linear: List[int] = Field(default_factory=lambda: [64, 1])
    prelu_init: float = Field(0.2)
    min_frames: int = Field(16, gt=0, description="Shorter inputs are zero-padded in time")

    @model_validator(mode="after")
    def _check_rules(self) -> "DiscriminatorConfig":
        if len(self.channels) != 4:
            raise ValueError("the discriminator has exactly four convolution blocks")
        if not self.linear or self.linear[-1] != 1:
            raise ValueError("the last linear layer must produce one score")
        return self
