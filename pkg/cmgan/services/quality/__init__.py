"""
Quality Providers

CONCEPT: PESQ is an external standard, so the package only defines the
contract and two adapters:
- ExecutableQualityProvider: runs ``<tool> clean.wav test.wav``, reads one decimal from stdout
- HttpQualityProvider: POSTs both WAVs, reads one decimal from the response body

``build_provider`` picks the adapter from the --pesq-provider value.
"""

import logging
import math
import os
import tempfile
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional, Tuple

from cmgan.exceptions import QualityProviderError
from cmgan.models.audio import Waveform

logger = logging.getLogger(__name__)


class BaseQualityProvider(ABC):
    """
    Abstract base class for all quality providers

    All providers must implement ``score``
    """

    name = "provider"

    @abstractmethod
    def score(self, clean: Waveform, test: Waveform) -> float:
        """
        Raw quality score of ``test`` against ``clean``

        Raises:
            QualityProviderError: provider failed or returned something that is not a number
        """

    def _parse_score(self, text: str) -> float:
        """Shared by all providers: the answer must be exactly one finite decimal"""
        tokens = text.strip().split()
        if len(tokens) != 1:
            raise QualityProviderError(f"{self.name} returned {text.strip()!r}, expected one decimal")
        try:
            value = float(tokens[0])
        except ValueError as e:
            raise QualityProviderError(f"{self.name} returned a non-numeric score {tokens[0]!r}") from e
        if not math.isfinite(value):
            raise QualityProviderError(f"{self.name} returned a non-finite score {value}")
        return value

    @staticmethod
    def _write_pair(workdir: Path, clean: Waveform, test: Waveform) -> Tuple[Path, Path]:
        from cmgan.services.audio_io import write_wav

        return write_wav(clean, workdir / "clean.wav"), write_wav(test, workdir / "test.wav")

    @staticmethod
    def _workdir():
        return tempfile.TemporaryDirectory(prefix="cmgan-quality-")


def build_provider(spec: Optional[str], timeout: float = 120.0) -> Optional[BaseQualityProvider]:
    """
    Build a provider from a CLI value

    Args:
        spec: http(s) URL, path to an executable, or None

    Returns:
        Provider instance, or None when no provider is configured
    """
    if not spec:
        return None
    from cmgan.services.quality.executable_provider import ExecutableQualityProvider
    from cmgan.services.quality.http_provider import HttpQualityProvider

    if spec.startswith(("http://", "https://")):
        return HttpQualityProvider(spec, timeout=timeout)
    path = Path(spec)
    if not path.is_file() or not os.access(path, os.X_OK):
        raise QualityProviderError(f"quality provider {spec!r} is neither a URL nor an executable file")
    return ExecutableQualityProvider(path, timeout=timeout)


__all__ = ["BaseQualityProvider", "build_provider"]
