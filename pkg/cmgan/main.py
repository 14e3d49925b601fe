"""
Command-Line Entry Point

COMMANDS:
    degrade    clean WAV directory → degraded WAVs + manifest.jsonl
    train      manifest → checkpoints + train_log.csv
    enhance    checkpoint + WAV (or manifest) → enhanced WAVs, same file names
    evaluate   manifest (+ enhanced dir) → per-track CSV + mean row
    selfcheck  gradient, STFT and metric-oracle suites

EXIT CODES: 0 success, 1 domain or validation error, 2 usage error.
Diagnostics go to stderr; stdout carries only the requested result
(manifest path, checkpoint path, output files, CSV, self-check report).
"""

import argparse
import csv
import io
import logging
import sys
from pathlib import Path
from typing import List, Optional

import torch
from pydantic import ValidationError

from cmgan import __version__
from cmgan.config import KNOWN_METRICS, Settings, load_settings
from cmgan.exceptions import CmganError, ConfigError, QualityProviderError
from cmgan.models.training import QualityKind
from cmgan.nn.discriminator import Discriminator
from cmgan.nn.generator import Generator
from cmgan.services.audio_io import load_manifest
from cmgan.services.degrade import build_dataset
from cmgan.services.enhancer import SpeechEnhancer
from cmgan.services.metrics import MetricEvaluator
from cmgan.services.quality import build_provider
from cmgan.services.selfcheck import run_selfcheck
from cmgan.services.trainer import LAST_CHECKPOINT, AdversarialTrainer, load_tracks
from cmgan.utils.files import atomic_path

logger = logging.getLogger(__name__)


# =============================================================================
# LOGGING SETUP
# =============================================================================

def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )


def _settings(args: argparse.Namespace) -> Settings:
    """Flags on top of config file, environment and defaults"""
    overrides = {
        name: getattr(args, name, None)
        for name in (
            "log_level", "seed", "task", "snr", "split", "noise", "scale", "t60", "reverb_noise_snr",
            "channels", "blocks", "epochs", "batch", "grad_clip", "quality", "pesq_provider", "metrics", "num_workers",
        )
    }
    settings = load_settings(getattr(args, "config", None), **overrides)
    _configure_logging(settings.log_level)
    return settings


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_degrade(args: argparse.Namespace) -> int:
    settings = _settings(args)
    manifest = build_dataset(Path(args.clean_dir), settings.degrade_spec(), Path(args.out), settings.seed,
                             settings.num_workers)
    print(manifest)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    settings = _settings(args)
    train_cfg = settings.train_config()
    provider = build_provider(settings.pesq_provider)
    if train_cfg.quality == QualityKind.PESQ and provider is None:
        raise QualityProviderError("--quality pesq needs --pesq-provider (or use --quality llr)")

    entries = load_manifest(Path(args.manifest))
    other_tasks = sorted({entry.task.value for entry in entries if entry.task != train_cfg.task})
    if other_tasks:
        raise ConfigError(
            f"manifest holds {', '.join(other_tasks)} tracks but training is set to {train_cfg.task.value}; "
            f"pass --task to match"
        )
    tracks = load_tracks(entries)
    run_dir = Path(args.run_dir or Path("runs") / train_cfg.task.value)

    torch.manual_seed(settings.seed)
    generator = Generator(settings.generator_config())
    discriminator = Discriminator(settings.discriminator_config())
    trainer = AdversarialTrainer(
        generator,
        discriminator,
        train_cfg,
        provider=provider,
        metric_cfg=settings.metric_config(),
        run_dir=run_dir,
    )
    if args.resume:
        trainer.restore(Path(args.resume))
    trainer.fit(tracks, max_steps=args.max_steps, checkpoint_every=args.checkpoint_every)
    print(run_dir / LAST_CHECKPOINT)
    return 0


def cmd_enhance(args: argparse.Namespace) -> int:
    if not args.input and not args.manifest:
        raise CmganError("enhance needs --input or --manifest")
    enhancer = SpeechEnhancer.from_checkpoint(Path(args.checkpoint))
    out_dir = Path(args.out)
    if args.input:
        outputs = [enhancer.enhance_file(Path(args.input), out_dir)]
    else:
        outputs = enhancer.enhance_manifest(load_manifest(Path(args.manifest)), out_dir)
    for path in outputs:
        print(path)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    settings = _settings(args)
    names = settings.metric_names
    provider = build_provider(settings.pesq_provider)
    entries = load_manifest(Path(args.manifest))
    evaluator = MetricEvaluator(names, settings.metric_config(), provider, settings.num_workers)
    rows = evaluator.evaluate(entries, Path(args.enhanced_dir) if args.enhanced_dir else None)

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=["track"] + names, lineterminator="\n")
    writer.writeheader()
    for entry, row in zip(entries, rows):
        writer.writerow({"track": entry.track_id, **row})
    writer.writerow({"track": "mean", **MetricEvaluator.summarize(rows)})

    if args.out:
        with atomic_path(Path(args.out)) as tmp:
            tmp.write_text(buffer.getvalue())
        print(args.out)
    else:
        sys.stdout.write(buffer.getvalue())
    return 0


def cmd_selfcheck(args: argparse.Namespace) -> int:
    settings = _settings(args)
    results = run_selfcheck(settings.seed, inject_fault=args.inject_fault, trials=args.trials, pairs=args.pairs)
    for result in results:
        print(result.line())
    return 0 if all(result.passed for result in results) else 1


# =============================================================================
# ARGUMENT PARSING
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmgan", description="Conformer-based metric GAN speech enhancement")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="KEY=VALUE config file (see docs/CONFIG_FORMAT.md)")
    common.add_argument("--seed", type=int)
    common.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--num-workers", dest="num_workers", type=int)
    common.add_argument("--task", choices=["denoise", "dereverb", "superres"])

    sub = parser.add_subparsers(dest="command", required=True)

    degrade = sub.add_parser("degrade", parents=[common], help="synthesize a paired dataset")
    degrade.add_argument("--clean-dir", dest="clean_dir", required=True)
    degrade.add_argument("--out", required=True, help="output directory")
    degrade.add_argument("--snr", help="comma-separated SNRs in dB")
    degrade.add_argument("--split", choices=["train", "test"])
    degrade.add_argument("--noise", help="comma-separated noise kinds")
    degrade.add_argument("--scale", type=int)
    degrade.add_argument("--t60", help="'low,high' seconds")
    degrade.add_argument("--reverb-noise-snr", dest="reverb_noise_snr", type=float,
                         help="dereverb only: also add white noise at this SNR in dB")
    degrade.set_defaults(handler=cmd_degrade)

    train = sub.add_parser("train", parents=[common], help="adversarial training")
    train.add_argument("--manifest", required=True)
    train.add_argument("--run-dir", dest="run_dir")
    train.add_argument("--resume", help="checkpoint to continue from")
    train.add_argument("--channels", type=int)
    train.add_argument("--blocks", type=int)
    train.add_argument("--epochs", type=int)
    train.add_argument("--batch", type=int)
    train.add_argument("--grad-clip", dest="grad_clip", type=float)
    train.add_argument("--quality", choices=[kind.value for kind in QualityKind])
    train.add_argument("--pesq-provider", dest="pesq_provider")
    train.add_argument("--max-steps", dest="max_steps", type=int)
    train.add_argument("--checkpoint-every", dest="checkpoint_every", type=int)
    train.set_defaults(handler=cmd_train)

    enhance = sub.add_parser("enhance", parents=[common], help="run a trained generator")
    enhance.add_argument("--checkpoint", required=True)
    enhance.add_argument("--input", help="single WAV file")
    enhance.add_argument("--manifest", help="enhance every degraded file of a manifest")
    enhance.add_argument("--out", required=True, help="output directory")
    enhance.set_defaults(handler=cmd_enhance)

    evaluate = sub.add_parser("evaluate", parents=[common], help="objective metrics over a manifest")
    evaluate.add_argument("--manifest", required=True)
    evaluate.add_argument("--metrics", help=f"comma-separated, from {','.join(KNOWN_METRICS)}")
    evaluate.add_argument("--enhanced-dir", dest="enhanced_dir")
    evaluate.add_argument("--pesq-provider", dest="pesq_provider")
    evaluate.add_argument("--out", help="CSV path (default: stdout)")
    evaluate.set_defaults(handler=cmd_evaluate)

    selfcheck = sub.add_parser("selfcheck", parents=[common], help="built-in consistency checks")
    selfcheck.add_argument("--inject-fault", dest="inject_fault", action="store_true")
    selfcheck.add_argument("--trials", type=int, default=20)
    selfcheck.add_argument("--pairs", type=int, default=10)
    selfcheck.set_defaults(handler=cmd_selfcheck)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level or "INFO")
    try:
        return args.handler(args)
    except (CmganError, ValidationError) as e:
        message = "; ".join(line.strip() for line in str(e).splitlines() if line.strip())
        logger.error(f"❌ {args.command} failed: {message or type(e).__name__}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
