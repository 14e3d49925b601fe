"""
Adversarial Training

CONCEPT: Each step updates the generator, then the metric discriminator.

STEP:
1. generator forward on the degraded slices (compressed spectrogram input)
2. generator update on γ1·L_TF + γ2·L_GAN + γ3·L_Time with the discriminator frozen
3. quality Q of the current enhanced audio, one score per batch item
4. discriminator update on L_D with the generator output detached

SCHEDULE: AdamW for both networks, learning rates halved every 12 epochs
(StepLR stepped once per epoch). Batches are random fixed-length crops,
reshuffled per epoch from (seed, epoch) only, so a resumed run sees the
same data as an uninterrupted one.
"""

import csv
import json
import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn
from torch.optim.lr_scheduler import StepLR

from cmgan.exceptions import ShapeError, TrainingDivergedError
from cmgan.models.audio import ManifestEntry
from cmgan.models.metrics import MetricConfig
from cmgan.models.spectral import StftConfig
from cmgan.models.training import LossReport, OptimizerState, QualityKind, TrainConfig
from cmgan.nn.discriminator import Discriminator
from cmgan.nn.generator import Generator
from cmgan.nn.losses import GeneratorLossParts, disc_loss, gen_adv_loss, tf_loss, time_loss, total_gen_loss
from cmgan.services.audio_io import read_wav
from cmgan.services.checkpoint import load_checkpoint, save_checkpoint
from cmgan.services.metrics import quality_for_disc
from cmgan.utils import dsp
from cmgan.utils.files import atomic_path

logger = logging.getLogger(__name__)

LOG_NAME = "train_log.csv"
LAST_CHECKPOINT = "last.pt"


# =============================================================================
# Optimizer and schedule
# =============================================================================

def adamw_step(
    params: Sequence[torch.Tensor],
    grads: Sequence[torch.Tensor],
    state: OptimizerState,
    lr: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    wd: Optional[float] = None,
) -> Tuple[List[torch.Tensor], OptimizerState]:
    """
    One AdamW update, written out

    p ← p·(1 − lr·wd) − lr·m̂ / (sqrt(v̂) + eps), with bias-corrected moments.
    Returns new parameter tensors and the advanced state; inputs are not modified.
    """
    wd = state.weight_decay if wd is None else wd
    beta1, beta2 = betas
    step = state.step + 1
    exp_avg = state.state_dict.get("exp_avg") or [torch.zeros_like(p) for p in params]
    exp_avg_sq = state.state_dict.get("exp_avg_sq") or [torch.zeros_like(p) for p in params]

    new_params, new_avg, new_avg_sq = [], [], []
    for p, g, m, v in zip(params, grads, exp_avg, exp_avg_sq):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** step)
        v_hat = v / (1.0 - beta2 ** step)
        new_params.append(p * (1.0 - lr * wd) - lr * m_hat / (v_hat.sqrt() + eps))
        new_avg.append(m)
        new_avg_sq.append(v)

    new_state = OptimizerState(
        step=step,
        weight_decay=wd,
        state_dict={"exp_avg": new_avg, "exp_avg_sq": new_avg_sq},
    )
    return new_params, new_state


def lr_at(epoch: int, cfg: TrainConfig, network: str = "generator") -> float:
    """Base rate × decay^floor(epoch / decay_every)"""
    base = cfg.lr_gen if network == "generator" else cfg.lr_disc
    return base * cfg.lr_decay_factor ** (epoch // cfg.lr_decay_every)


# =============================================================================
# Data
# =============================================================================

@dataclass
class Track:
    track_id: str
    clean: np.ndarray
    degraded: np.ndarray


@dataclass
class Batch:
    """Equal-length crops; tensors are [B, slice_samples] float32"""
    ids: List[str]
    clean: torch.Tensor
    degraded: torch.Tensor


def load_tracks(entries: Sequence[ManifestEntry]) -> List[Track]:
    """Read every (clean, degraded) pair of a manifest into memory"""
    tracks = []
    for entry in entries:
        clean, degraded = read_wav(entry.clean_path), read_wav(entry.degraded_path)
        if len(clean) != len(degraded) or clean.sample_rate != degraded.sample_rate:
            raise ShapeError(
                f"{entry.track_id}: clean and degraded differ "
                f"({len(clean)} @ {clean.sample_rate} Hz vs {len(degraded)} @ {degraded.sample_rate} Hz)"
            )
        tracks.append(Track(entry.track_id, clean.samples, degraded.samples))
    return tracks


def slice_dataset(
    tracks: Sequence[Track],
    slice_samples: int,
    batch_size: int,
    seed: int,
    epoch: int = 0,
) -> List[Batch]:
    """
    Shuffle tracks and cut one random crop of exactly ``slice_samples`` from each

    Shorter tracks are zero-padded at the end. Clean and degraded share the
    crop offset. The last batch may be smaller.
    """
    rng = np.random.default_rng([seed, epoch])
    order = rng.permutation(len(tracks))
    ids, cleans, noisies = [], [], []
    for index in order:
        track = tracks[int(index)]
        length = track.clean.size
        clean = np.zeros(slice_samples)
        noisy = np.zeros(slice_samples)
        if length >= slice_samples:
            start = int(rng.integers(0, length - slice_samples + 1))
            clean[:] = track.clean[start:start + slice_samples]
            noisy[:] = track.degraded[start:start + slice_samples]
        else:
            clean[:length] = track.clean
            noisy[:length] = track.degraded
        ids.append(track.track_id)
        cleans.append(clean)
        noisies.append(noisy)

    batches = []
    for start in range(0, len(ids), batch_size):
        stop = start + batch_size
        batches.append(Batch(
            ids=ids[start:stop],
            clean=torch.from_numpy(np.stack(cleans[start:stop])).float(),
            degraded=torch.from_numpy(np.stack(noisies[start:stop])).float(),
        ))
    return batches


# =============================================================================
# Trainer
# =============================================================================

class AdversarialTrainer:
    """
    Owns both networks, their optimizers and schedulers

    Usage:
        trainer = AdversarialTrainer(Generator(gen_cfg), Discriminator(), train_cfg)
        trainer.fit(tracks, run_dir=Path("runs/toy"))
    """

    def __init__(
        self,
        generator: Generator,
        discriminator: Discriminator,
        cfg: TrainConfig,
        stft_cfg: Optional[StftConfig] = None,
        provider=None,
        metric_cfg: Optional[MetricConfig] = None,
        run_dir: Optional[Path] = None,
    ):
        self.generator = generator
        self.discriminator = discriminator
        self.cfg = cfg
        self.stft_cfg = stft_cfg or StftConfig()
        self.provider = provider
        self.metric_cfg = metric_cfg or MetricConfig()
        self.run_dir = Path(run_dir) if run_dir else None

        opt_args = {"betas": cfg.betas, "eps": cfg.eps, "weight_decay": cfg.weight_decay}
        self.gen_opt = torch.optim.AdamW(generator.parameters(), lr=cfg.lr_gen, **opt_args)
        self.disc_opt = torch.optim.AdamW(discriminator.parameters(), lr=cfg.lr_disc, **opt_args)
        self.gen_sched = StepLR(self.gen_opt, step_size=cfg.lr_decay_every, gamma=cfg.lr_decay_factor)
        self.disc_sched = StepLR(self.disc_opt, step_size=cfg.lr_decay_every, gamma=cfg.lr_decay_factor)

        self.epoch = 0
        self.batch_index = 0
        self.step = 0
        self._started = time.perf_counter()

    # ------------------------------------------------------------------
    # One step
    # ------------------------------------------------------------------

    def _spectra(self, wave: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        spec = dsp.stft_tensor(wave, self.stft_cfg)
        return dsp.compress_tensor(spec.real, spec.imag, self.generator.cfg.compress_exponent)

    def _check_finite(self, losses: Dict[str, float], batch: Batch) -> None:
        if all(math.isfinite(value) for value in losses.values()):
            return
        dump_path = None
        if self.run_dir is not None:
            dump_path = self.run_dir / f"divergence_step{self.step}.json"
            record = {"step": self.step, "epoch": self.epoch, "batch_ids": batch.ids, "losses": losses}
            with atomic_path(dump_path) as tmp:
                tmp.write_text(json.dumps(record, indent=2, default=str))
        logger.error(f"❌ Non-finite loss at step {self.step}: {losses}")
        raise TrainingDivergedError("training diverged", step=self.step, batch_ids=list(batch.ids), dump_path=dump_path)

    def _clip(self, module: nn.Module) -> None:
        if self.cfg.grad_clip is not None:
            torch.nn.utils.clip_grad_norm_(module.parameters(), self.cfg.grad_clip)

    def train_step(self, batch: Batch) -> LossReport:
        """
        One generator update followed by one discriminator update

        Raises:
            TrainingDivergedError: a loss is NaN or infinite (nothing is updated)
        """
        self.generator.train()
        self.discriminator.train()
        kind = QualityKind(self.cfg.quality)
        weights = self.cfg.loss_weights
        c = self.generator.cfg.compress_exponent
        length = batch.clean.shape[-1]

        gain = dsp.level_scale(batch.degraded)
        clean, noisy = batch.clean * gain, batch.degraded * gain
        noisy_r, noisy_i = self._spectra(noisy)
        clean_r, clean_i = self._spectra(clean)
        clean_mag = torch.sqrt(clean_r ** 2 + clean_i ** 2)

        # (1) generator forward
        out = self.generator(dsp.pack_tensor(noisy_r, noisy_i))
        est_r, est_i = dsp.decompress_tensor(out.real, out.imag, c)
        est_wave = dsp.istft_tensor(torch.complex(est_r, est_i), self.stft_cfg, length)

        # (2) generator update, discriminator frozen
        self.discriminator.requires_grad_(False)
        parts = GeneratorLossParts(
            tf=tf_loss(clean_mag, torch.stack([clean_r, clean_i], dim=-1), out.magnitude, out.recombined, weights.alpha),
            gan=gen_adv_loss(self.discriminator, clean_mag, out.magnitude, kind),
            time=time_loss(clean, est_wave),
        )
        gen_loss = total_gen_loss(parts, weights)
        self.discriminator.requires_grad_(True)

        # (3) per-item quality of the enhanced audio at the original level
        enhanced = (est_wave / gain).detach().double().numpy()
        reference = batch.clean.double().numpy()
        scores = [
            quality_for_disc(reference[k], enhanced[k], kind, self.provider, self.cfg.sample_rate, self.metric_cfg)
            for k in range(len(batch.ids))
        ]

        # (4) discriminator loss on detached output
        d_loss = disc_loss(self.discriminator, clean_mag, out.magnitude.detach(), scores, kind)

        losses = {
            "tf_loss": parts.tf.item(),
            "gan_loss": parts.gan.item(),
            "time_loss": parts.time.item(),
            "gen_loss": gen_loss.item(),
            "disc_loss": d_loss.item(),
        }
        self._check_finite(losses, batch)

        self.gen_opt.zero_grad(set_to_none=True)
        gen_loss.backward()
        self._clip(self.generator)
        self.gen_opt.step()

        self.disc_opt.zero_grad(set_to_none=True)
        d_loss.backward()
        self._clip(self.discriminator)
        self.disc_opt.step()

        report = LossReport(
            step=self.step,
            epoch=self.epoch,
            lr_gen=self.gen_opt.param_groups[0]["lr"],
            lr_disc=self.disc_opt.param_groups[0]["lr"],
            quality=float(np.mean([score.value for score in scores])),
            wall_time=time.perf_counter() - self._started,
            **losses,
        )
        self.step += 1
        logger.debug(
            f"step {report.step}: tf {report.tf_loss:.4f} gan {report.gan_loss:.4f} "
            f"time {report.time_loss:.4f} disc {report.disc_loss:.4f}"
        )
        return report

    # ------------------------------------------------------------------
    # Checkpoints
    # ------------------------------------------------------------------

    def save(self, path: Path) -> Path:
        return save_checkpoint(
            path,
            self.generator,
            self.discriminator,
            optimizers={"generator": self.gen_opt, "discriminator": self.disc_opt},
            schedulers={"generator": self.gen_sched, "discriminator": self.disc_sched},
            epoch=self.epoch,
            step=self.step,
            batch_index=self.batch_index,
            train_config=self.cfg.model_dump(mode="json"),
        )

    def restore(self, path: Path) -> None:
        """Load weights, optimizer and scheduler state, progress and RNG state"""
        payload = load_checkpoint(path)
        self.generator.load_state_dict(payload["generator"]["state"])
        if payload.get("discriminator"):
            self.discriminator.load_state_dict(payload["discriminator"]["state"])
        optimizers = payload.get("optimizers", {})
        if "generator" in optimizers:
            self.gen_opt.load_state_dict(optimizers["generator"])
        if "discriminator" in optimizers:
            self.disc_opt.load_state_dict(optimizers["discriminator"])
        schedulers = payload.get("schedulers", {})
        if "generator" in schedulers:
            self.gen_sched.load_state_dict(schedulers["generator"])
        if "discriminator" in schedulers:
            self.disc_sched.load_state_dict(schedulers["discriminator"])
        progress = payload["progress"]
        self.epoch, self.batch_index, self.step = progress["epoch"], progress["batch_index"], progress["step"]
        torch.set_rng_state(payload["rng"])
        logger.info(f"♻️ Resumed from {path} at epoch {self.epoch}, step {self.step}")

    # ------------------------------------------------------------------
    # Epoch loop
    # ------------------------------------------------------------------

    def _append_log(self, reports: Sequence[LossReport]) -> None:
        if self.run_dir is None or not reports:
            return
        log_path = self.run_dir / LOG_NAME
        new_file = not log_path.exists()
        self.run_dir.mkdir(parents=True, exist_ok=True)
        with open(log_path, "a", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(LossReport.model_fields))
            if new_file:
                writer.writeheader()
            for report in reports:
                writer.writerow(report.csv_row())

    def fit(
        self,
        tracks: Sequence[Track],
        max_steps: Optional[int] = None,
        checkpoint_every: Optional[int] = None,
    ) -> List[LossReport]:
        """
        Train until ``cfg.epochs`` (or ``max_steps`` total steps)

        Writes ``train_log.csv`` and ``last.pt`` into the run directory;
        ``epoch<N>.pt`` after every epoch, and ``last.pt`` also every
        ``checkpoint_every`` steps.
        """
        if not tracks:
            raise ShapeError("no training tracks")
        logger.info(
            f"🚀 Training on {len(tracks)} tracks: {self.cfg.epochs} epochs, batch {self.cfg.batch_size}, "
            f"quality {self.cfg.quality.value}"
        )
        history: List[LossReport] = []
        while self.epoch < self.cfg.epochs:
            batches = slice_dataset(tracks, self.cfg.slice_samples, self.cfg.batch_size, self.cfg.seed, self.epoch)
            pending: List[LossReport] = []
            while self.batch_index < len(batches):
                if max_steps is not None and self.step >= max_steps:
                    self._append_log(pending)
                    self._checkpoint(LAST_CHECKPOINT)
                    return history
                report = self.train_step(batches[self.batch_index])
                self.batch_index += 1
                history.append(report)
                pending.append(report)
                if checkpoint_every and self.step % checkpoint_every == 0:
                    self._append_log(pending)
                    pending = []
                    self._checkpoint(LAST_CHECKPOINT)

            self._append_log(pending)
            self.epoch += 1
            self.batch_index = 0
            self.gen_sched.step()
            self.disc_sched.step()
            if history:
                logger.info(
                    f"✅ Epoch {self.epoch}/{self.cfg.epochs} done: "
                    f"tf {history[-1].tf_loss:.4f}, disc {history[-1].disc_loss:.4f}"
                )
            self._checkpoint(f"epoch{self.epoch}.pt")
            self._checkpoint(LAST_CHECKPOINT)
        return history

    def _checkpoint(self, name: str) -> None:
        if self.run_dir is not None:
            self.save(self.run_dir / name)
