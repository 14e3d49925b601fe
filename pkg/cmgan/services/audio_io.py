"""
WAV and Manifest I/O

CONCEPT: The only place the package touches audio files on disk.

WHY SOUNDFILE?
- Reads the WAV header for us (rate, channels, subtype)
- Returns int16 frames untouched, so scaling by 1/32768 is exact
- Same library for reading and writing, no codec surprises

FORMATS:
- WAV: RIFF/WAVE, 16-bit PCM, mono (stereo is averaged down)
- Manifest: UTF-8 JSON-lines with clean_path, degraded_path, task, meta
"""

import json
import logging
from pathlib import Path
from typing import Iterable, List

import numpy as np
import soundfile as sf
from pydantic import ValidationError

from cmgan.exceptions import AudioFormatError, ManifestError
from cmgan.models.audio import ManifestEntry, Waveform
from cmgan.utils.files import atomic_path

logger = logging.getLogger(__name__)

PCM_SCALE = 32768.0


class AudioIO:
    """
    Reads and writes 16-bit PCM WAV files and JSON-lines manifests

    DESIGN PATTERN: Stateless helper class; every method is a static
    function of its arguments, so it is safe to call from many threads.
    """

    @staticmethod
    def read_wav(path: Path) -> Waveform:
        """
        Load a 16-bit PCM WAV file

        Args:
            path: WAV file on disk

        Returns:
            Waveform scaled to [-1, 1) by division by 32768

        Raises:
            AudioFormatError: missing file, other encodings, or no samples
        """
        path = Path(path)
        if not path.is_file():
            raise AudioFormatError(f"audio file not found: {path}")
        try:
            info = sf.info(str(path))
            if info.format != "WAV" or info.subtype != "PCM_16":
                raise AudioFormatError(f"{path}: expected 16-bit PCM WAV, got {info.format}/{info.subtype}")
            frames, sample_rate = sf.read(str(path), dtype="int16", always_2d=True)
        except AudioFormatError:
            raise
        except RuntimeError as e:
            raise AudioFormatError(f"{path}: unreadable WAV: {str(e)}") from e

        if frames.shape[0] == 0:
            raise AudioFormatError(f"{path}: zero-length audio")

        # Down-mix by averaging channels
        samples = frames.astype(np.float64).mean(axis=1) / PCM_SCALE
        if frames.shape[1] > 1:
            logger.debug(f"Down-mixed {frames.shape[1]} channels from {path.name}")
        return Waveform(samples=samples, sample_rate=int(sample_rate))

    @staticmethod
    def write_wav(w: Waveform, path: Path) -> Path:
        """
        Write a mono 16-bit PCM WAV file atomically

        Values outside [-1, 32767/32768] are clipped before quantization.
        """
        path = Path(path)
        pcm = np.clip(np.round(w.samples * PCM_SCALE), -32768, 32767).astype(np.int16)
        try:
            with atomic_path(path) as tmp:
                sf.write(str(tmp), pcm, w.sample_rate, subtype="PCM_16", format="WAV")
        except (OSError, RuntimeError) as e:
            raise AudioFormatError(f"cannot write {path}: {str(e)}") from e
        return path

    @staticmethod
    def load_manifest(path: Path, strict: bool = True) -> List[ManifestEntry]:
        """
        Parse a JSON-lines manifest

        Relative paths are resolved against the manifest's directory.
        Blank lines are ignored.

        Args:
            path: manifest file
            strict: raise on a dangling audio path instead of skipping the entry

        Raises:
            ManifestError: malformed record (with its line number) or dangling path in strict mode
        """
        path = Path(path)
        if not path.is_file():
            raise ManifestError(f"manifest not found: {path}")
        base = path.parent
        entries: List[ManifestEntry] = []

        with path.open("r", encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    entry = ManifestEntry.model_validate(record)
                except (json.JSONDecodeError, ValidationError, TypeError) as e:
                    raise ManifestError(f"malformed record: {str(e)}", line_number) from e

                entry = entry.model_copy(
                    update={
                        "clean_path": _resolve(base, entry.clean_path),
                        "degraded_path": _resolve(base, entry.degraded_path),
                    }
                )
                missing = [p for p in (entry.clean_path, entry.degraded_path) if not p.is_file()]
                if missing:
                    if strict:
                        raise ManifestError(f"audio file not found: {missing[0]}", line_number)
                    logger.warning(f"⚠️ Skipping manifest line {line_number}: {missing[0]} not found")
                    continue
                entries.append(entry)

        logger.info(f"📄 Loaded {len(entries)} manifest entries from {path}")
        return entries

    @staticmethod
    def write_manifest(entries: Iterable[ManifestEntry], path: Path) -> Path:
        """
        Write entries as JSON-lines (temp file + rename)

        Paths inside the manifest's directory are stored relative to it,
        keys are sorted, so identical inputs give byte-identical files.
        """
        path = Path(path)
        base = path.parent.resolve()
        lines = []
        for entry in entries:
            record = entry.model_dump(mode="json")
            record["clean_path"] = _relative(base, entry.clean_path)
            record["degraded_path"] = _relative(base, entry.degraded_path)
            lines.append(json.dumps(record, sort_keys=True))

        with atomic_path(path) as tmp:
            tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        logger.info(f"📝 Wrote {len(lines)} manifest entries to {path}")
        return path


def _resolve(base: Path, target: Path) -> Path:
    return target if target.is_absolute() else base / target


def _relative(base: Path, target: Path) -> str:
    resolved = Path(target).resolve()
    try:
        return resolved.relative_to(base).as_posix()
    except ValueError:
        return resolved.as_posix()


# Module-level shortcuts
read_wav = AudioIO.read_wav
write_wav = AudioIO.write_wav
load_manifest = AudioIO.load_manifest
write_manifest = AudioIO.write_manifest
