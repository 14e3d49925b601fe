"""Package initialization for services"""
from .audio_io import AudioIO
from .degrade import DatasetBuilder
from .metrics import MetricEvaluator
from .enhancer import SpeechEnhancer
from .trainer import AdversarialTrainer

__all__ = [
    "AudioIO",
    "DatasetBuilder",
    "MetricEvaluator",
    "SpeechEnhancer",
    "AdversarialTrainer",
]
