"""
Training Objectives

GENERATOR:  L = γ1·L_TF + γ2·L_GAN + γ3·L_Time
    L_TF   = α·MSE(X_m, X̂_m) + (1-α)·(MSE(X_r, X̂_r) + MSE(X_i, X̂_i))
    L_GAN  = MSE(D(X_m, X̂_m), t_clean)
    L_Time = mean |x - x̂|

DISCRIMINATOR:
    L_D = MSE(D(X_m, X_m), t_clean) + MSE(D(X_m, X̂_m), Q)

t_clean is 1 when Q comes from PESQ (higher is better) and 0 when it comes
from LLR (lower is better). Squared norms are realized as means, so the
values do not grow with track length.
"""

from typing import Callable, NamedTuple, Sequence, Union

import torch
import torch.nn.functional as F

from cmgan.models.training import LossWeights, QualityKind, QualityScore

ScoreFn = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]

# Raw score ranges mapped onto [0, 1]
PESQ_RANGE = (-0.5, 4.5)
LLR_RANGE = (0.0, 2.0)


class GeneratorLossParts(NamedTuple):
    tf: torch.Tensor
    gan: torch.Tensor
    time: torch.Tensor


def tf_loss(
    clean_mag: torch.Tensor,
    clean_ri: torch.Tensor,
    est_mag: torch.Tensor,
    est_ri: torch.Tensor,
    alpha: float = 0.7,
) -> torch.Tensor:
    """Magnitude plus complex loss on compressed spectrograms; ``*_ri`` are [..., 2]"""
    magnitude = F.mse_loss(est_mag, clean_mag)
    complex_part = F.mse_loss(est_ri[..., 0], clean_ri[..., 0]) + F.mse_loss(est_ri[..., 1], clean_ri[..., 1])
    return alpha * magnitude + (1.0 - alpha) * complex_part


def time_loss(clean: torch.Tensor, estimate: torch.Tensor) -> torch.Tensor:
    """Mean absolute error over samples"""
    return F.l1_loss(estimate, clean)


def gen_adv_loss(
    disc: ScoreFn,
    clean_mag: torch.Tensor,
    est_mag: torch.Tensor,
    kind: QualityKind = QualityKind.PESQ,
) -> torch.Tensor:
    """Push the discriminator's score of the enhanced pair to the clean target"""
    score = disc(clean_mag, est_mag).flatten()
    return F.mse_loss(score, torch.full_like(score, kind.clean_target))


def disc_loss(
    disc: ScoreFn,
    clean_mag: torch.Tensor,
    est_mag: torch.Tensor,
    quality: Union[torch.Tensor, Sequence[QualityScore], QualityScore],
    kind: QualityKind = QualityKind.PESQ,
) -> torch.Tensor:
    """
    Teach D to score (clean, clean) as t_clean and (clean, enhanced) as Q

    ``quality`` is one target per batch item (or a single score for all).
    The enhanced magnitude is detached so no gradient reaches the generator.
    """
    clean_score = disc(clean_mag, clean_mag).flatten()
    est_score = disc(clean_mag, est_mag.detach()).flatten()
    target = _quality_tensor(quality, est_score)
    return F.mse_loss(clean_score, torch.full_like(clean_score, kind.clean_target)) + F.mse_loss(est_score, target)


def total_gen_loss(parts: GeneratorLossParts, weights: LossWeights) -> torch.Tensor:
    return weights.gamma1 * parts.tf + weights.gamma2 * parts.gan + weights.gamma3 * parts.time


def normalize_quality(raw: float, kind: QualityKind) -> QualityScore:
    """
    Map a raw metric value onto [0, 1]

    pesq: (raw + 0.5) / 5, clamped
    llr:  clamp(raw, 0, 2) / 2
    """
    kind = QualityKind(kind)
    low, high = PESQ_RANGE if kind == QualityKind.PESQ else LLR_RANGE
    value = (min(max(float(raw), low), high) - low) / (high - low)
    return QualityScore(value=value, kind=kind)


def _quality_tensor(quality, like: torch.Tensor) -> torch.Tensor:
    if isinstance(quality, QualityScore):
        return torch.full_like(like, quality.value)
    if isinstance(quality, torch.Tensor):
        target = quality.to(like).flatten()
    else:
        target = torch.tensor([q.value for q in quality], dtype=like.dtype, device=like.device)
    if target.numel() == 1:
        return target.expand_as(like)
    return target
