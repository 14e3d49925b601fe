"""Quality provider backed by a local executable: ``tool clean.wav test.wav`` → one decimal on stdout"""

import logging
import subprocess
from pathlib import Path

from cmgan.exceptions import QualityProviderError
from cmgan.models.audio import Waveform
from cmgan.services.quality import BaseQualityProvider

logger = logging.getLogger(__name__)


class ExecutableQualityProvider(BaseQualityProvider):
    """Runs an external scoring tool once per pair"""

    name = "executable provider"

    def __init__(self, executable: Path, timeout: float = 120.0):
        self.executable = Path(executable)
        self.timeout = timeout
        logger.info(f"Quality provider: executable {self.executable}")

    def score(self, clean: Waveform, test: Waveform) -> float:
        with self._workdir() as tmp:
            clean_path, test_path = self._write_pair(Path(tmp), clean, test)
            try:
                result = subprocess.run(
                    [str(self.executable), str(clean_path), str(test_path)],
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                    check=False,
                )
            except (OSError, subprocess.TimeoutExpired) as e:
                raise QualityProviderError(f"failed to run {self.executable}: {str(e)}") from e

        if result.returncode != 0:
            raise QualityProviderError(
                f"{self.executable} exited with {result.returncode}: {result.stderr.strip()[:200]}"
            )
        value = self._parse_score(result.stdout)
        logger.debug(f"{self.executable.name} → {value}")
        return value
