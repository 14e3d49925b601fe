"""
Quality provider backed by an HTTP service

PROTOCOL:
    POST <url>  multipart fields "clean" and "test" (16-bit PCM WAV)
    200 OK      body is one decimal
"""

import logging
from pathlib import Path

import requests

from cmgan.exceptions import QualityProviderError
from cmgan.models.audio import Waveform
from cmgan.services.quality import BaseQualityProvider

logger = logging.getLogger(__name__)


class HttpQualityProvider(BaseQualityProvider):
    """Posts each pair to a scoring service"""

    name = "http provider"

    def __init__(self, url: str, timeout: float = 60.0):
        self.url = url
        self.timeout = timeout
        logger.info(f"Quality provider: {self.url}")

    def score(self, clean: Waveform, test: Waveform) -> float:
        with self._workdir() as tmp:
            clean_path, test_path = self._write_pair(Path(tmp), clean, test)
            try:
                with clean_path.open("rb") as clean_file, test_path.open("rb") as test_file:
                    response = requests.post(
                        self.url,
                        files={
                            "clean": ("clean.wav", clean_file, "audio/wav"),
                            "test": ("test.wav", test_file, "audio/wav"),
                        },
                        timeout=self.timeout,
                    )
            except requests.RequestException as e:
                raise QualityProviderError(f"Failed to connect to {self.url}: {str(e)}") from e

        if response.status_code != 200:
            raise QualityProviderError(f"{self.url} answered {response.status_code}: {response.text[:200]}")
        return self._parse_score(response.text)
