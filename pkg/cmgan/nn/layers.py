"""
Differentiable Building Blocks

CONCEPT: Every learnable piece of the generator and discriminator is a
plain ``torch.nn.Module`` here, so autograd supplies backward passes and
``grad_check`` can verify them against finite differences.

LAYOUT:
- 2-D feature maps are channel-first: [batch, channels, time, freq]
- Sequences (conformer input) are [batch, length, channels]

BLOCKS:
- ConvBlock: Conv2d → InstanceNorm2d(affine) → PReLU
- DilatedDenseBlock: four dense-connected (2×3) convs, dilations 1, 2, 4, 8 in time
- ConformerBlock: ½FFN → MHSA → convolution module → ½FFN → LayerNorm
- SubPixelConv2d: conv to C·r channels, then shuffle into r× frequency
"""

import logging
import math
from typing import Sequence, Tuple

import torch
from torch import nn

from cmgan.exceptions import ShapeError
from cmgan.models.network import LayerSpec

logger = logging.getLogger(__name__)


# =============================================================================
# Functional helpers
# =============================================================================

def prelu(x: torch.Tensor, slopes: torch.Tensor, axis: int = 1) -> torch.Tensor:
    """y = x for x >= 0, slope·x otherwise, slope indexed along ``axis``"""
    shape = [1] * x.dim()
    shape[axis] = -1
    slope = slopes.reshape(shape) if slopes.numel() > 1 else slopes.reshape([1] * x.dim())
    return torch.where(x >= 0, x, slope * x)


def make_conv(in_channels: int, spec: LayerSpec, bias: bool = True) -> nn.Conv2d:
    """Conv2d from a table row (kernel, stride, channels, dilation, padding)"""
    return nn.Conv2d(
        in_channels,
        spec.channels,
        kernel_size=spec.kernel,
        stride=spec.stride,
        dilation=spec.dilation,
        padding=spec.padding,
        bias=bias,
    )


def pixel_shuffle_freq(x: torch.Tensor, r: int) -> torch.Tensor:
    """
    [B, C·r, T, F] → [B, C, T, F·r]

    Channel block j lands on frequency positions j, j+r, j+2r, ...
    """
    b, cr, t, f = x.shape
    if cr % r:
        raise ShapeError(f"{cr} channels cannot be split into {r} blocks")
    c = cr // r
    return x.view(b, r, c, t, f).permute(0, 2, 3, 4, 1).reshape(b, c, t, f * r)


def pixel_unshuffle_freq(x: torch.Tensor, r: int) -> torch.Tensor:
    """Inverse of ``pixel_shuffle_freq``"""
    b, c, t, fr = x.shape
    if fr % r:
        raise ShapeError(f"{fr} frequency bins cannot be split by {r}")
    f = fr // r
    return x.view(b, c, t, f, r).permute(0, 4, 1, 2, 3).reshape(b, r * c, t, f)


def init_weights(module: nn.Module) -> None:
    """Xavier for linear layers; convolutions keep torch's Kaiming-uniform default"""
    for sub in module.modules():
        if isinstance(sub, nn.Linear):
            nn.init.xavier_uniform_(sub.weight)
            if sub.bias is not None:
                nn.init.zeros_(sub.bias)


# =============================================================================
# Convolutional blocks
# =============================================================================

class AxisPReLU(nn.Module):
    """PReLU with one learnable slope per index of ``axis`` (e.g. per frequency bin)"""

    def __init__(self, num: int, init: float = 0.2, axis: int = -1):
        super().__init__()
        self.axis = axis
        self.weight = nn.Parameter(torch.full((num,), float(init)))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[self.axis] != self.weight.numel():
            raise ShapeError(f"expected {self.weight.numel()} entries on axis {self.axis}, got {x.shape[self.axis]}")
        return prelu(x, self.weight, self.axis % x.dim())


class ConvBlock(nn.Module):
    """Conv2d → InstanceNorm2d(affine) → PReLU(per channel)"""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel: Tuple[int, int] = (1, 1),
        stride: Tuple[int, int] = (1, 1),
        padding: Tuple[int, int] = (0, 0),
        prelu_init: float = 0.2,
    ):
        super().__init__()
        self.spec = LayerSpec(kernel=kernel, stride=stride, channels=out_channels, padding=padding)
        self.conv = make_conv(in_channels, self.spec)
        self.norm = nn.InstanceNorm2d(out_channels, affine=True)
        self.act = nn.PReLU(out_channels, init=prelu_init)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.conv.in_channels:
            raise ShapeError(f"expected {self.conv.in_channels} input channels, got {x.shape[1]}")
        return self.act(self.norm(self.conv(x)))


class DilatedDenseBlock(nn.Module):
    """
    Dense-connected dilated convolutions

    Stage k sees the concatenation of its predecessors' outputs and the block
    input (C·(k+1) channels). Time padding is on the past side only, so the
    receptive field along T is 1 + sum(dilations) frames.
    """

    def __init__(
        self,
        channels: int,
        dilations: Sequence[int] = (1, 2, 4, 8),
        kernel: Tuple[int, int] = (2, 3),
        prelu_init: float = 0.2,
    ):
        super().__init__()
        self.channels = channels
        self.dilations = list(dilations)
        kt, kf = kernel
        stages = []
        for k, d in enumerate(self.dilations):
            pad_t = d * (kt - 1)
            pad_f = (kf - 1) // 2
            stages.append(
                nn.Sequential(
                    nn.ConstantPad2d((pad_f, pad_f, pad_t, 0), 0.0),
                    nn.Conv2d(channels * (k + 1), channels, kernel_size=kernel, dilation=(d, 1)),
                    nn.InstanceNorm2d(channels, affine=True),
                    nn.PReLU(channels, init=prelu_init),
                )
            )
        self.stages = nn.ModuleList(stages)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.channels:
            raise ShapeError(f"dense block expects {self.channels} channels, got {x.shape[1]}")
        skip = x
        out = x
        for stage in self.stages:
            out = stage(skip)
            skip = torch.cat([out, skip], dim=1)
        return out


class SubPixelConv2d(nn.Module):
    """Frequency up-sampling: (1×3) conv to C_out·r channels, then frequency shuffle"""

    def __init__(self, in_channels: int, out_channels: int, kernel: Tuple[int, int] = (1, 3), r: int = 2):
        super().__init__()
        self.r = r
        self.out_channels = out_channels
        pad_f = (kernel[1] - 1) // 2
        self.pad = nn.ConstantPad2d((pad_f, pad_f, 0, 0), 0.0)
        self.conv = nn.Conv2d(in_channels, out_channels * r, kernel_size=kernel)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return pixel_shuffle_freq(self.conv(self.pad(x)), self.r)


# =============================================================================
# Conformer
# =============================================================================

class MultiHeadSelfAttention(nn.Module):
    """
    Scaled dot-product attention over [S, L, C] sequences

    No positional encoding: permuting the L positions permutes the output
    the same way.
    """

    def __init__(self, dim: int, heads: int = 4, dropout: float = 0.0):
        super().__init__()
        if dim % heads:
            raise ShapeError(f"dim={dim} is not divisible by heads={heads}")
        self.heads = heads
        self.dim_head = dim // heads
        self.to_q = nn.Linear(dim, dim)
        self.to_k = nn.Linear(dim, dim)
        self.to_v = nn.Linear(dim, dim)
        self.to_out = nn.Linear(dim, dim)
        self.dropout = nn.Dropout(dropout)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        s, length, _ = x.shape
        return x.view(s, length, self.heads, self.dim_head).transpose(1, 2)

    def attention(self, x: torch.Tensor) -> torch.Tensor:
        """Attention matrices [S, heads, L, L]; each row sums to 1"""
        q, k = self._split(self.to_q(x)), self._split(self.to_k(x))
        scores = torch.matmul(q, k.transpose(-1, -2)) / math.sqrt(self.dim_head)
        return scores.softmax(dim=-1)

    def forward(self, x: torch.Tensor, return_weights: bool = False):
        if x.dim() != 3:
            raise ShapeError(f"attention expects [S, L, C], got {tuple(x.shape)}")
        weights = self.attention(x)
        v = self._split(self.to_v(x))
        out = torch.matmul(self.dropout(weights), v)
        s, _, length, _ = out.shape
        out = self.to_out(out.transpose(1, 2).reshape(s, length, -1))
        return (out, weights) if return_weights else out


class FeedForward(nn.Module):
    """LayerNorm → Linear(×mult) → Swish → Dropout → Linear → Dropout"""

    def __init__(self, dim: int, mult: int = 4, dropout: float = 0.0):
        super().__init__()
        self.net = nn.Sequential(
            nn.LayerNorm(dim),
            nn.Linear(dim, dim * mult),
            nn.SiLU(),
            nn.Dropout(dropout),
            nn.Linear(dim * mult, dim),
            nn.Dropout(dropout),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class ConformerConvModule(nn.Module):
    """LayerNorm → pointwise → GLU → depthwise (same padding) → Swish → pointwise → Dropout"""

    def __init__(self, dim: int, expansion: int = 2, kernel: int = 31, dropout: float = 0.0):
        super().__init__()
        inner = dim * expansion
        self.norm = nn.LayerNorm(dim)
        self.pointwise_in = nn.Conv1d(dim, inner * 2, kernel_size=1)
        self.glu = nn.GLU(dim=1)
        # zero 'same' padding: taps beyond a short sequence only ever see zeros
        self.depthwise = nn.Conv1d(inner, inner, kernel_size=kernel, padding=kernel // 2, groups=inner)
        self.act = nn.SiLU()
        self.pointwise_out = nn.Conv1d(inner, dim, kernel_size=1)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.norm(x).transpose(1, 2)
        y = self.glu(self.pointwise_in(y))
        y = self.act(self.depthwise(y))
        y = self.dropout(self.pointwise_out(y))
        return y.transpose(1, 2)


class ConformerBlock(nn.Module):
    """
    Macaron conformer over [S, L, C]

    x ← x + ½·FFN(x); x ← x + MHSA(LN(x)); x ← x + Conv(x);
    x ← x + ½·FFN(x); y = LN(x)
    """

    def __init__(
        self,
        dim: int,
        heads: int = 4,
        ff_mult: int = 4,
        conv_expansion: int = 2,
        conv_kernel: int = 31,
        dropout: float = 0.2,
    ):
        super().__init__()
        self.ff1 = FeedForward(dim, ff_mult, dropout)
        self.attn_norm = nn.LayerNorm(dim)
        self.attn = MultiHeadSelfAttention(dim, heads, dropout)
        self.attn_dropout = nn.Dropout(dropout)
        self.conv = ConformerConvModule(dim, conv_expansion, conv_kernel, dropout)
        self.ff2 = FeedForward(dim, ff_mult, dropout)
        self.post_norm = nn.LayerNorm(dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 3 or x.shape[1] < 1:
            raise ShapeError(f"conformer expects [S, L>=1, C], got {tuple(x.shape)}")
        x = x + 0.5 * self.ff1(x)
        x = x + self.attn_dropout(self.attn(self.attn_norm(x)))
        x = x + self.conv(x)
        x = x + 0.5 * self.ff2(x)
        return self.post_norm(x)

    def residual_outputs(self) -> Sequence[nn.Module]:
        """Last layer of every residual branch (zeroing them makes the block a LayerNorm)"""
        return [self.ff1.net[4], self.attn.to_out, self.conv.pointwise_out, self.ff2.net[4]]


def channel_first(x: torch.Tensor) -> torch.Tensor:
    """[B, T, F, C] → [B, C, T, F]"""
    return x.permute(0, 3, 1, 2).contiguous()
