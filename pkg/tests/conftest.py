"""
Shared fixtures

Synthetic audio only: harmonic "speech" (a gliding pitch with a syllable
envelope), tones and white noise, all seeded.
"""

from pathlib import Path
from typing import List

import numpy as np
import pytest

from cmgan.models.audio import Waveform
from cmgan.services.audio_io import write_wav

SAMPLE_RATE = 16000


def harmonic_speech(seconds: float = 1.0, sample_rate: int = SAMPLE_RATE, seed: int = 0) -> Waveform:
    """Voiced-speech stand-in: 8 harmonics of a 120-220 Hz pitch under a 4 Hz envelope"""
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * sample_rate)) / sample_rate
    f0 = rng.uniform(120.0, 220.0) * (1.0 + 0.1 * np.sin(2 * np.pi * 0.5 * t))
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    voiced = sum(np.sin(k * phase + rng.uniform(0, 2 * np.pi)) / k for k in range(1, 9))
    envelope = 0.55 + 0.45 * np.sin(2 * np.pi * 4.0 * t + rng.uniform(0, 2 * np.pi))
    samples = voiced * envelope
    return Waveform(samples=0.3 * samples / np.max(np.abs(samples)), sample_rate=sample_rate)


def tone(freq: float, seconds: float = 1.0, amplitude: float = 0.5, sample_rate: int = SAMPLE_RATE) -> Waveform:
    t = np.arange(int(seconds * sample_rate)) / sample_rate
    return Waveform(samples=amplitude * np.sin(2 * np.pi * freq * t), sample_rate=sample_rate)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def speech():
    return harmonic_speech(1.0, seed=7)


@pytest.fixture
def clean_dir(tmp_path) -> Path:
    """Three 1 s clean tracks"""
    directory = tmp_path / "clean"
    for k in range(3):
        write_wav(harmonic_speech(1.0, seed=k), directory / f"utt{k}.wav")
    return directory


@pytest.fixture
def clean_files(clean_dir) -> List[Path]:
    return sorted(clean_dir.glob("*.wav"))


# =============================================================================
# Slow acceptance runs (toy training) are opt-in: pytest --runslow
# =============================================================================

def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow training tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: minutes-long toy training run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)
