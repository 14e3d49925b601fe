"""Package initialization for models"""
from .audio import ManifestEntry, Task, Waveform
from .degrade import DegradeSpec
from .metrics import MetricConfig
from .network import (
    DecoderMode,
    DiscriminatorConfig,
    GeneratorConfig,
    LayerSpec,
    MaskActivation,
    MaskMode,
)
from .spectral import PackedInput, Spectrogram, StftConfig
from .training import (
    LossReport,
    LossWeights,
    OptimizerState,
    QualityKind,
    QualityScore,
    TrainConfig,
)

__all__ = [
    "Waveform",
    "ManifestEntry",
    "Task",
    "DegradeSpec",
    "MetricConfig",
    "DecoderMode",
    "DiscriminatorConfig",
    "GeneratorConfig",
    "LayerSpec",
    "MaskActivation",
    "MaskMode",
    "PackedInput",
    "Spectrogram",
    "StftConfig",
    "LossReport",
    "LossWeights",
    "OptimizerState",
    "QualityKind",
    "QualityScore",
    "TrainConfig",
]
