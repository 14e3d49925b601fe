"""
Conformer-Based Generator

FLOW:
    packed [B, T, F, 3] (compressed magnitude, real, imaginary)
      → encoder: 1×1 conv → dilated dense block → (1×3, stride (1,2)) conv   [B, C, T, F']
      → N two-stage conformers (time, then frequency)                        [B, C, T, F']
      → mask decoder     → mask M (or offset M')                             [B, T, F]
      → complex decoder  → residual (X'_r, X'_i)                             [B, T, F, 2]
      → recombine with the noisy magnitude and phase                          [B, T, F, 2]

MODES:
- multiply (denoise, dereverb): X_r = M·Y_m·cos Y_p + X'_r
- add (super-resolution):       X_r = (M' + Y_m)·cos Y_p + X'_r
Imaginary parts use sin; the output magnitude is sqrt(X_r² + X_i²).
"""

import logging
from dataclasses import dataclass
from typing import Optional

import torch
from torch import nn

from cmgan.exceptions import ConfigError, ShapeError
from cmgan.models.audio import Task
from cmgan.models.network import DecoderMode, GeneratorConfig, MaskActivation, MaskMode, mask_mode_for
from cmgan.nn.layers import (
    AxisPReLU,
    ConformerBlock,
    ConvBlock,
    DilatedDenseBlock,
    SubPixelConv2d,
    channel_first,
    init_weights,
)

logger = logging.getLogger(__name__)

MAGNITUDE_EPS = 1e-14

# Input channels taken from the packed (magnitude, real, imaginary) tensor
_INPUT_CHANNELS = {
    DecoderMode.MASK_COMPLEX: [0, 1, 2],
    DecoderMode.MASK_ONLY: [0],
    DecoderMode.COMPLEX_ONLY: [1, 2],
}


@dataclass
class GeneratorOutput:
    """Everything one forward pass produces; all tensors are [B, T, F(, 2)]"""
    mask_or_offset: Optional[torch.Tensor]
    complex_residual: Optional[torch.Tensor]
    recombined: torch.Tensor
    magnitude: torch.Tensor

    @property
    def real(self) -> torch.Tensor:
        return self.recombined[..., 0]

    @property
    def imag(self) -> torch.Tensor:
        return self.recombined[..., 1]


def recombine(
    mask_or_offset: Optional[torch.Tensor],
    complex_residual: Optional[torch.Tensor],
    magnitude: torch.Tensor,
    phase: torch.Tensor,
    mode: MaskMode,
    task: Optional[Task] = None,
):
    """
    Merge the two decoder paths into the final compressed spectrogram

    Args:
        mask_or_offset: [B, T, F] mask (multiply) or offset (add); None skips the magnitude path
        complex_residual: [B, T, F, 2]; None means zero residual
        magnitude, phase: noisy compressed magnitude Y_m and phase Y_p, [B, T, F]
        mode: multiply or add
        task: when given, must agree with ``mode``

    Returns:
        (X_r, X_i, X_m)
    """
    if task is not None and mask_mode_for(task) != MaskMode(mode):
        raise ConfigError(f"mask mode {MaskMode(mode).value} does not fit task {task.value}")

    if mask_or_offset is None:
        real = torch.zeros_like(magnitude)
        imag = torch.zeros_like(magnitude)
    else:
        if mask_or_offset.shape != magnitude.shape:
            raise ShapeError(f"mask {tuple(mask_or_offset.shape)} vs magnitude {tuple(magnitude.shape)}")
        if MaskMode(mode) == MaskMode.MULTIPLY:
            enhanced = mask_or_offset * magnitude
        else:
            enhanced = mask_or_offset + magnitude
        real = enhanced * torch.cos(phase)
        imag = enhanced * torch.sin(phase)

    if complex_residual is not None:
        if complex_residual.shape[:-1] != magnitude.shape or complex_residual.shape[-1] != 2:
            raise ShapeError(f"residual {tuple(complex_residual.shape)} vs magnitude {tuple(magnitude.shape)}")
        real = real + complex_residual[..., 0]
        imag = imag + complex_residual[..., 1]

    out_magnitude = torch.sqrt(real ** 2 + imag ** 2 + MAGNITUDE_EPS)
    return real, imag, out_magnitude


class DenseEncoder(nn.Module):
    """Input conv → dilated dense block → frequency-halving conv"""

    def __init__(self, in_channels: int, cfg: GeneratorConfig):
        super().__init__()
        c = cfg.channels
        self.conv_in = ConvBlock(in_channels, c, (1, 1), prelu_init=cfg.prelu_init)
        self.dense = DilatedDenseBlock(c, cfg.dilations, prelu_init=cfg.prelu_init)
        # symmetric padding keeps F=201 → 101
        self.conv_out = ConvBlock(c, c, (1, 3), stride=(1, 2), padding=(0, 1), prelu_init=cfg.prelu_init)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv_out(self.dense(self.conv_in(x)))


class TSConformerBlock(nn.Module):
    """Time conformer over (B·F')×T×C, then frequency conformer over (B·T)×F'×C, each with a residual"""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        kwargs = dict(
            dim=cfg.channels,
            heads=cfg.heads,
            ff_mult=cfg.ff_mult,
            conv_expansion=cfg.conv_expansion,
            conv_kernel=cfg.conv_kernel,
            dropout=cfg.dropout,
        )
        self.time_conformer = ConformerBlock(**kwargs)
        self.freq_conformer = ConformerBlock(**kwargs)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, t, f = x.shape
        x_t = x.permute(0, 3, 2, 1).reshape(b * f, t, c)
        x_t = self.time_conformer(x_t) + x_t
        x_f = x_t.view(b, f, t, c).permute(0, 2, 1, 3).reshape(b * t, f, c)
        x_f = self.freq_conformer(x_f) + x_f
        return x_f.view(b, t, f, c).permute(0, 3, 1, 2)


class MaskDecoder(nn.Module):
    """Dense block → sub-pixel ×2 → (1×2) conv to one channel → 1×1 conv → activation"""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        c = cfg.channels
        self.dense = DilatedDenseBlock(c, cfg.dilations, prelu_init=cfg.prelu_init)
        self.sub_pixel = SubPixelConv2d(c, c, (1, 3), r=2)
        self.conv = ConvBlock(c, 1, (1, 2), prelu_init=cfg.prelu_init)
        self.final_conv = nn.Conv2d(1, 1, (1, 1))
        self.activation = _mask_activation(cfg)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.final_conv(self.conv(self.sub_pixel(self.dense(x))))
        return self.activation(x).squeeze(1)


class ComplexDecoder(nn.Module):
    """Dense block → sub-pixel ×2 → InstanceNorm → PReLU → (1×2) conv to two channels, no output activation"""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        c = cfg.channels
        self.dense = DilatedDenseBlock(c, cfg.dilations, prelu_init=cfg.prelu_init)
        self.sub_pixel = SubPixelConv2d(c, c, (1, 3), r=2)
        self.norm = nn.InstanceNorm2d(c, affine=True)
        self.act = nn.PReLU(c, init=cfg.prelu_init)
        self.conv = nn.Conv2d(c, 2, (1, 2))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.conv(self.act(self.norm(self.sub_pixel(self.dense(x)))))
        return x.permute(0, 2, 3, 1)


def _mask_activation(cfg: GeneratorConfig) -> nn.Module:
    if cfg.mask_activation == MaskActivation.PRELU:
        return AxisPReLU(cfg.freq_bins, init=cfg.prelu_init, axis=-1)
    return {
        MaskActivation.SIGMOID: nn.Sigmoid,
        MaskActivation.RELU: nn.ReLU,
        MaskActivation.SOFTPLUS: nn.Softplus,
    }[cfg.mask_activation]()


class Generator(nn.Module):
    """
    Encoder, two-stage conformer stack and the two decoders

    Usage:
        gen = Generator(GeneratorConfig(channels=16, num_blocks=1))
        out = gen(packed)          # packed: [B, T, 201, 3]
        out.magnitude              # [B, T, 201]
    """

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        self.input_channels = _INPUT_CHANNELS[cfg.decoder_mode]
        self.encoder = DenseEncoder(len(self.input_channels), cfg)
        self.blocks = nn.ModuleList(TSConformerBlock(cfg) for _ in range(cfg.num_blocks))
        self.mask_decoder = MaskDecoder(cfg) if cfg.decoder_mode != DecoderMode.COMPLEX_ONLY else None
        self.complex_decoder = ComplexDecoder(cfg) if cfg.decoder_mode != DecoderMode.MASK_ONLY else None
        init_weights(self)

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """[B, Cin, T, F] → [B, C, T, F']"""
        return self.encoder(x)

    def ts_conformer_stack(self, d: torch.Tensor) -> torch.Tensor:
        """Shape-preserving; identity when num_blocks is 0"""
        for block in self.blocks:
            d = block(d)
        return d

    def decode_mask(self, d: torch.Tensor) -> Optional[torch.Tensor]:
        return self.mask_decoder(d) if self.mask_decoder is not None else None

    def decode_complex(self, d: torch.Tensor) -> Optional[torch.Tensor]:
        return self.complex_decoder(d) if self.complex_decoder is not None else None

    def forward(self, packed: torch.Tensor) -> GeneratorOutput:
        if packed.dim() != 4 or packed.shape[-1] != 3 or packed.shape[2] != self.cfg.freq_bins:
            raise ShapeError(f"generator expects [B, T, {self.cfg.freq_bins}, 3], got {tuple(packed.shape)}")
        magnitude, real, imag = packed[..., 0], packed[..., 1], packed[..., 2]

        d = self.encode(channel_first(packed[..., self.input_channels]))
        d = self.ts_conformer_stack(d)
        mask = self.decode_mask(d)
        residual = self.decode_complex(d)

        out_real, out_imag, out_magnitude = recombine(
            mask, residual, magnitude, torch.atan2(imag, real), self.cfg.mask_mode
        )
        return GeneratorOutput(
            mask_or_offset=mask,
            complex_residual=residual,
            recombined=torch.stack([out_real, out_imag], dim=-1),
            magnitude=out_magnitude,
        )
