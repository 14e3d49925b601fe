"""
Checkpoint Container

LAYOUT (one torch.save dict):
    format_version   int, bumped on incompatible changes
    generator        {"config": GeneratorConfig as JSON dict, "state": state_dict}
    discriminator    {"config": DiscriminatorConfig as JSON dict, "state": state_dict} or None
    optimizers       {"generator": ..., "discriminator": ...} AdamW state dicts
    schedulers       {"generator": ..., "discriminator": ...} StepLR state dicts
    progress         {"epoch", "batch_index", "step"}
    train_config     TrainConfig as JSON dict
    rng              torch CPU generator state

Only tensors and plain containers are stored, so loading works with
``weights_only=True``.
"""

import io
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import torch

from cmgan.exceptions import CheckpointError, CheckpointVersionError
from cmgan.models.network import DiscriminatorConfig, GeneratorConfig
from cmgan.nn.discriminator import Discriminator
from cmgan.nn.generator import Generator
from cmgan.utils.files import atomic_path

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(
    path: Path,
    generator: Generator,
    discriminator: Optional[Discriminator] = None,
    optimizers: Optional[Dict[str, torch.optim.Optimizer]] = None,
    schedulers: Optional[Dict[str, Any]] = None,
    epoch: int = 0,
    step: int = 0,
    batch_index: int = 0,
    train_config: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a checkpoint atomically and return its path"""
    payload = {
        "format_version": FORMAT_VERSION,
        "generator": {"config": generator.cfg.model_dump(mode="json"), "state": generator.state_dict()},
        "discriminator": None,
        "optimizers": {name: opt.state_dict() for name, opt in (optimizers or {}).items()},
        "schedulers": {name: sched.state_dict() for name, sched in (schedulers or {}).items()},
        "progress": {"epoch": epoch, "batch_index": batch_index, "step": step},
        "train_config": train_config,
        "rng": torch.get_rng_state(),
    }
    if discriminator is not None:
        payload["discriminator"] = {
            "config": discriminator.cfg.model_dump(mode="json"),
            "state": discriminator.state_dict(),
        }

    # in-memory save keeps the archive name independent of the temp file name
    buffer = io.BytesIO()
    torch.save(payload, buffer)
    with atomic_path(path) as tmp:
        tmp.write_bytes(buffer.getvalue())
    logger.info(f"💾 Checkpoint saved: {path} (epoch {epoch}, step {step})")
    return Path(path)


def load_checkpoint(path: Path) -> Dict[str, Any]:
    """
    Read and validate a checkpoint

    Raises:
        CheckpointError: file missing or unreadable, or a section is missing
        CheckpointVersionError: written by another format version
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {str(e)}") from e

    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CheckpointError(f"{path} is not a checkpoint")
    version = payload["format_version"]
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path} has format version {version}; this build reads version {FORMAT_VERSION}"
        )
    if not payload.get("generator"):
        raise CheckpointError(f"{path} has no generator section")
    return payload


def generator_from(payload: Dict[str, Any]) -> Generator:
    """Rebuild the generator stored in a loaded checkpoint"""
    section = payload["generator"]
    model = Generator(GeneratorConfig(**section["config"]))
    model.load_state_dict(section["state"])
    return model


def discriminator_from(payload: Dict[str, Any]) -> Optional[Discriminator]:
    section = payload.get("discriminator")
    if section is None:
        return None
    model = Discriminator(DiscriminatorConfig(**section["config"]))
    model.load_state_dict(section["state"])
    return model
