"""
Domain Errors

CONCEPT: Every error the package raises on purpose derives from ValueError,
so callers that only know "bad input" keep working, while the CLI can tell
our failures apart from genuine bugs.
"""

from pathlib import Path
from typing import List, Optional


class CmganError(ValueError):
    """Base class for all expected failures"""


class AudioFormatError(CmganError):
    """WAV file missing, empty, or not 16-bit PCM"""


class ManifestError(CmganError):
    """Malformed or dangling manifest record"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ConfigError(CmganError):
    """Configuration that violates a declared invariant"""


class ShapeError(CmganError):
    """Tensor shapes that cannot be combined"""


class DegenerateFrameError(CmganError):
    """Analysis frame with zero autocorrelation (silence)"""


class QualityProviderError(CmganError):
    """External quality provider absent or returned garbage"""


class CheckpointError(CmganError):
    """Checkpoint file unreadable or incomplete"""


class CheckpointVersionError(CheckpointError):
    """Checkpoint written by an incompatible format version"""


class TrainingDivergedError(CmganError):
    """A loss became NaN or infinite"""

    def __init__(
        self,
        message: str,
        step: int,
        batch_ids: List[str],
        dump_path: Optional[Path] = None,
    ):
        self.step = step
        self.batch_ids = batch_ids
        self.dump_path = dump_path
        super().__init__(f"{message} (step {step}, batch {batch_ids})")
