"""
Symbolic Shape Walk

CONCEPT: Compute the architecture table (layer, input size, hyperparameters,
output size) with integer arithmetic only, no tensors. Tests cross-check the
walk against forward hooks on real modules, so the table and the code
cannot drift apart.

Shapes are written channel-last, as in the table: [B, T, F, C].
"""

from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

from cmgan.models.network import DecoderMode, DiscriminatorConfig, GeneratorConfig, LayerSpec


class ShapeRow(BaseModel):
    """One row of the architecture table"""
    section: str = Field(..., description="Encoder, TS-Conformer, Mask decoder, ...")
    layer: str
    input_shape: Tuple[int, ...]
    hyper: str = Field("--", description="Table notation of the layer hyperparameters")
    output_shape: Tuple[int, ...]

    def render(self) -> str:
        return (
            f"{self.section:<14} {self.layer:<14} {_fmt(self.input_shape):<20} "
            f"{self.hyper:<20} {_fmt(self.output_shape)}"
        )


def _fmt(shape: Tuple[int, ...]) -> str:
    return "×".join(str(n) for n in shape)


def _conv_out(n: int, kernel: int, stride: int, pad: int, dilation: int = 1) -> int:
    return (n + 2 * pad - dilation * (kernel - 1) - 1) // stride + 1


def _dense_rows(section: str, shape: Tuple[int, int, int, int], cfg: GeneratorConfig) -> List[ShapeRow]:
    rows = []
    for k, d in enumerate(cfg.dilations, start=1):
        spec = LayerSpec(kernel=(2, 3), channels=cfg.channels, dilation=(d, 1))
        rows.append(ShapeRow(section=section, layer=f"Dil. Dense-{k}", input_shape=shape,
                             hyper=spec.describe(with_dilation=True), output_shape=shape))
    return rows


def generator_walk(cfg: GeneratorConfig, frames: int, batch: int = 1) -> List[ShapeRow]:
    """Rows for the encoder, each TS-Conformer, and both decoders"""
    b, t, f, c = batch, frames, cfg.freq_bins, cfg.channels
    f_half = _conv_out(f, 3, 2, 1)
    in_channels = {DecoderMode.MASK_COMPLEX: 3, DecoderMode.MASK_ONLY: 1, DecoderMode.COMPLEX_ONLY: 2}[cfg.decoder_mode]
    rows: List[ShapeRow] = []

    rows.append(ShapeRow(section="Encoder", layer="2D-Conv.", input_shape=(b, t, f, in_channels),
                         hyper=LayerSpec(channels=c).describe(), output_shape=(b, t, f, c)))
    rows += _dense_rows("Encoder", (b, t, f, c), cfg)
    rows.append(ShapeRow(section="Encoder", layer="2D-Conv.", input_shape=(b, t, f, c),
                         hyper=LayerSpec(kernel=(1, 3), stride=(1, 2), channels=c).describe(),
                         output_shape=(b, t, f_half, c)))

    for n in range(cfg.num_blocks):
        section = f"TS-Conf.-{n + 1}"
        rows += [
            ShapeRow(section=section, layer="Reshape", input_shape=(b, t, f_half, c), output_shape=(f_half * b, t, c)),
            ShapeRow(section=section, layer="Time-Conf.", input_shape=(f_half * b, t, c), output_shape=(f_half * b, t, c)),
            ShapeRow(section=section, layer="Reshape", input_shape=(f_half * b, t, c), output_shape=(b * t, f_half, c)),
            ShapeRow(section=section, layer="Freq.-Conf.", input_shape=(b * t, f_half, c), output_shape=(b * t, f_half, c)),
            ShapeRow(section=section, layer="Reshape", input_shape=(b * t, f_half, c), output_shape=(b, t, f_half, c)),
        ]

    f_up = 2 * f_half
    sub_pixel = LayerSpec(kernel=(1, 3), channels=2 * c).describe()
    f_out = _conv_out(f_up, 2, 1, 0)
    if cfg.decoder_mode != DecoderMode.COMPLEX_ONLY:
        rows += _dense_rows("Mask Dec.", (b, t, f_half, c), cfg)
        rows += [
            ShapeRow(section="Mask Dec.", layer="Sub-pixel", input_shape=(b, t, f_half, c), hyper=sub_pixel,
                     output_shape=(b, t, f_up, c)),
            ShapeRow(section="Mask Dec.", layer="2D-Conv.", input_shape=(b, t, f_up, c),
                     hyper=LayerSpec(kernel=(1, 2), channels=1).describe(), output_shape=(b, t, f_out, 1)),
            ShapeRow(section="Mask Dec.", layer="2D-Conv.", input_shape=(b, t, f_out, 1),
                     hyper=LayerSpec(channels=1).describe(), output_shape=(b, t, f_out, 1)),
            ShapeRow(section="Mask Dec.", layer=cfg.mask_activation.value, input_shape=(b, t, f_out, 1),
                     hyper=str(f_out) if cfg.mask_activation.value == "prelu" else "--", output_shape=(b, t, f_out, 1)),
        ]
    if cfg.decoder_mode != DecoderMode.MASK_ONLY:
        rows += _dense_rows("Complex Dec.", (b, t, f_half, c), cfg)
        rows += [
            ShapeRow(section="Complex Dec.", layer="Sub-pixel", input_shape=(b, t, f_half, c), hyper=sub_pixel,
                     output_shape=(b, t, f_up, c)),
            ShapeRow(section="Complex Dec.", layer="2D-Conv.", input_shape=(b, t, f_up, c),
                     hyper=LayerSpec(kernel=(1, 2), channels=2).describe(), output_shape=(b, t, f_out, 2)),
        ]
    return rows


def discriminator_walk(cfg: DiscriminatorConfig, frames: int, freq_bins: int = 201, batch: int = 1) -> List[ShapeRow]:
    """Rows for the metric discriminator; T is first padded up to ``min_frames``"""
    t, f, c = max(frames, cfg.min_frames), freq_bins, 2
    pad_t, pad_f = cfg.kernel[0] // 2 - 1, cfg.kernel[1] // 2 - 1
    rows: List[ShapeRow] = []
    for k, channels in enumerate(cfg.channels, start=1):
        t_out = _conv_out(t, cfg.kernel[0], cfg.stride[0], pad_t)
        f_out = _conv_out(f, cfg.kernel[1], cfg.stride[1], pad_f)
        spec = LayerSpec(kernel=cfg.kernel, stride=cfg.stride, channels=channels)
        rows.append(ShapeRow(section="Metric Disc.", layer=f"2D-Conv.-{k}", input_shape=(batch, t, f, c),
                             hyper=spec.describe(), output_shape=(batch, t_out, f_out, channels)))
        t, f, c = t_out, f_out, channels
    rows.append(ShapeRow(section="Metric Disc.", layer="Avg. Pooling", input_shape=(batch, t, f, c),
                         output_shape=(batch, c)))
    for k, width in enumerate(cfg.linear, start=1):
        rows.append(ShapeRow(section="Metric Disc.", layer=f"Linear-{k}", input_shape=(batch, c),
                             hyper=str(width), output_shape=(batch, width)))
        c = width
    return rows


def shape_walk(cfg: GeneratorConfig, frames: int, disc: Optional[DiscriminatorConfig] = None, batch: int = 1) -> List[ShapeRow]:
    """Full architecture table: generator rows followed by discriminator rows"""
    return generator_walk(cfg, frames, batch) + discriminator_walk(disc or DiscriminatorConfig(), frames, cfg.freq_bins, batch)
