"""
Metric Discriminator

Predicts a normalized quality score in (0, 1) for a (reference, test) pair of
compressed magnitudes. Four strided conv blocks, global average pooling and
two linear layers; the pooling makes the score independent of T.
"""

import logging
from typing import Optional

import torch
import torch.nn.functional as F
from torch import nn

from cmgan.exceptions import ShapeError
from cmgan.models.network import DiscriminatorConfig, LayerSpec
from cmgan.nn.layers import init_weights, make_conv

logger = logging.getLogger(__name__)


class Discriminator(nn.Module):
    """
    Conv(4×4, stride 2) + InstanceNorm + PReLU, four times → avg pool → Linear → PReLU → Linear → sigmoid

    Inputs shorter than ``min_frames`` are zero-padded at the end of the
    time axis so four stride-2 convolutions always leave at least one frame.
    """

    def __init__(self, cfg: Optional[DiscriminatorConfig] = None):
        super().__init__()
        cfg = cfg or DiscriminatorConfig()
        self.cfg = cfg
        pad = (cfg.kernel[0] // 2 - 1, cfg.kernel[1] // 2 - 1)
        blocks = []
        in_channels = 2
        for channels in cfg.channels:
            spec = LayerSpec(kernel=cfg.kernel, stride=cfg.stride, channels=channels, padding=pad)
            blocks.append(
                nn.Sequential(
                    make_conv(in_channels, spec, bias=False),
                    nn.InstanceNorm2d(channels, affine=True),
                    nn.PReLU(channels, init=cfg.prelu_init),
                )
            )
            in_channels = channels
        self.blocks = nn.ModuleList(blocks)
        self.pool = nn.AdaptiveAvgPool2d(1)

        head = []
        for k, width in enumerate(cfg.linear):
            head.append(nn.Linear(in_channels, width))
            if k < len(cfg.linear) - 1:
                head.append(nn.PReLU(width, init=cfg.prelu_init))
            in_channels = width
        self.head = nn.Sequential(*head)
        init_weights(self)

    def forward(self, ref_mag: torch.Tensor, test_mag: torch.Tensor) -> torch.Tensor:
        """
        Args:
            ref_mag, test_mag: [B, T, F] compressed magnitudes

        Returns:
            [B, 1] scores in (0, 1)
        """
        if ref_mag.shape != test_mag.shape or ref_mag.dim() != 3:
            raise ShapeError(f"reference {tuple(ref_mag.shape)} and test {tuple(test_mag.shape)} must match as [B, T, F]")
        x = torch.stack([ref_mag, test_mag], dim=1)
        short = self.cfg.min_frames - x.shape[2]
        if short > 0:
            x = F.pad(x, (0, 0, 0, short))
        for block in self.blocks:
            x = block(x)
        x = self.pool(x).flatten(1)
        return torch.sigmoid(self.head(x))


def disc_forward(model: Discriminator, ref_mag: torch.Tensor, test_mag: torch.Tensor) -> torch.Tensor:
    """Score a batch of magnitude pairs"""
    return model(ref_mag, test_mag)
