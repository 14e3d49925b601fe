"""
Self-Check Suites

Three suites, each a list of named pass/fail checks:
- gradients: finite-difference checks of every layer type and loss at toy sizes
- stft:      analysis/synthesis round trip on random waveforms
- oracles:   production metrics against the loop-based reference versions

``inject_fault`` corrupts the backward pass of the convolution block, so
the gradient suite must then fail.
"""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np
import torch
from pydantic import BaseModel

from cmgan.models.audio import Waveform
from cmgan.models.metrics import MetricConfig
from cmgan.models.network import DiscriminatorConfig
from cmgan.models.spectral import StftConfig
from cmgan.nn.discriminator import Discriminator
from cmgan.nn.grad_check import GradientFault, grad_check
from cmgan.nn.layers import AxisPReLU, ConformerBlock, ConvBlock, DilatedDenseBlock, SubPixelConv2d
from cmgan.nn.losses import gen_adv_loss, tf_loss, time_loss
from cmgan.services import metrics, oracles
from cmgan.utils import dsp

logger = logging.getLogger(__name__)

GRAD_TOL = 1e-4
STFT_TOL = 1e-6
ORACLE_TOL = 1e-6


class CheckResult(BaseModel):
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.suite}/{self.name}: {self.detail}"


def _gradient_cases(inject_fault: bool) -> List[Tuple[str, Callable, List[torch.Tensor]]]:
    conv = ConvBlock(3, 4, kernel=(2, 3), padding=(0, 1))
    if inject_fault:
        conv = GradientFault(conv)
    small_disc = Discriminator(DiscriminatorConfig(channels=[2, 2, 2, 2], linear=[4, 1])).double().eval()
    clean_mag = torch.rand(1, 5, 33, dtype=torch.float64) + 0.1
    clean_ri = torch.randn(1, 5, 33, 2, dtype=torch.float64)
    clean_wave = torch.randn(1, 64, dtype=torch.float64)

    return [
        ("conv_block", conv, [torch.randn(1, 3, 4, 6)]),
        ("instance_norm", torch.nn.InstanceNorm2d(3, affine=True), [torch.randn(1, 3, 4, 5)]),
        ("prelu", AxisPReLU(5, init=0.2), [torch.randn(2, 3, 5)]),
        ("dilated_dense", DilatedDenseBlock(2, dilations=[1, 2]), [torch.randn(1, 2, 5, 4)]),
        ("conformer", ConformerBlock(8, heads=2, ff_mult=2, conv_kernel=3, dropout=0.0), [torch.randn(2, 5, 8)]),
        ("sub_pixel", SubPixelConv2d(3, 2), [torch.randn(1, 3, 2, 4)]),
        ("discriminator", small_disc, [clean_mag, torch.rand(1, 5, 33) + 0.1]),
        ("tf_loss", lambda mag, ri: tf_loss(clean_mag, clean_ri, mag, ri), [torch.rand(1, 5, 33) + 0.1, torch.randn(1, 5, 33, 2)]),
        ("time_loss", lambda wave: time_loss(clean_wave, wave), [torch.randn(1, 64)]),
        ("gen_adv_loss", lambda mag: gen_adv_loss(small_disc, clean_mag, mag), [torch.rand(1, 5, 33) + 0.1]),
    ]


def gradient_suite(seed: int = 0, inject_fault: bool = False) -> List[CheckResult]:
    torch.manual_seed(seed)
    results = []
    for name, fn, inputs in _gradient_cases(inject_fault):
        report = grad_check(fn, inputs, tol=GRAD_TOL, step=1e-5, seed=seed)
        results.append(CheckResult(
            suite="gradients",
            name=name,
            passed=report.passed,
            detail=f"max rel. error {report.max_rel_error:.2e} at {report.worst()} ({report.checked_entries} entries)",
        ))
    return results


def stft_suite(seed: int = 0, trials: int = 20, cfg: Optional[StftConfig] = None) -> List[CheckResult]:
    """Random 1 to 3 s waveforms at 16 kHz; error measured away from the padded edges"""
    cfg = cfg or StftConfig()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(16000, 48001))
        w = Waveform(samples=rng.uniform(-1.0, 1.0, n), sample_rate=16000)
        back = dsp.istft(dsp.stft(w, cfg), cfg, n)
        edge = cfg.window_len
        worst = max(worst, float(np.max(np.abs(back.samples[edge:-edge] - w.samples[edge:-edge]))))
    return [CheckResult(suite="stft", name="round_trip", passed=worst < STFT_TOL, detail=f"L∞ error {worst:.2e} over {trials} signals")]


def oracle_suite(seed: int = 0, pairs: int = 10, cfg: Optional[MetricConfig] = None) -> List[CheckResult]:
    """1 s random pairs: reference plus scaled noise"""
    cfg = cfg or MetricConfig()
    rng = np.random.default_rng(seed)
    sample_rate = 16000
    worst = {}
    for _ in range(pairs):
        x = rng.standard_normal(sample_rate)
        y = x + rng.uniform(0.05, 1.0) * rng.standard_normal(sample_rate)
        production = metrics.evaluate_pair(
            Waveform(samples=x, sample_rate=sample_rate),
            Waveform(samples=y, sample_rate=sample_rate),
            list(oracles.ORACLE_METRICS),
            cfg,
        )
        reference = oracles.oracle_values(x, y, sample_rate, cfg)
        for name, value in reference.items():
            worst[name] = max(worst.get(name, 0.0), abs(production[name] - value))
    return [
        CheckResult(suite="oracles", name=name, passed=error < ORACLE_TOL, detail=f"max |Δ| {error:.2e} over {pairs} pairs")
        for name, error in worst.items()
    ]


def run_selfcheck(seed: int = 0, inject_fault: bool = False, trials: int = 20, pairs: int = 10) -> List[CheckResult]:
    """Run all suites and log one line per check"""
    results = gradient_suite(seed, inject_fault) + stft_suite(seed, trials) + oracle_suite(seed, pairs)
    for result in results:
        log = logger.debug if result.passed else logger.error
        log(result.line())
    failed = sum(not r.passed for r in results)
    logger.info(f"{'✅' if not failed else '❌'} Self-check: {len(results) - failed}/{len(results)} passed")
    return results
