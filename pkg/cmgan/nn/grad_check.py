"""
Finite-Difference Gradient Checker

CONCEPT: Compare autograd gradients of a scalar probe loss against central
differences, (L(θ+h) − L(θ−h)) / 2h, for every parameter and every input.

PROBE LOSS:
- "random" (default): ⟨w, output⟩ with a seeded Gaussian w. The plain sum
  of a normalisation layer's output is constant, so its gradient is zero
  and would hide errors.
- "sum": the literal sum of outputs.

ERROR MEASURE per tensor: ‖g_autograd − g_numeric‖ / max(‖g_autograd‖, ‖g_numeric‖)
over the sampled entries.
"""

import logging
from typing import Callable, Dict, List, Literal, Sequence, Tuple, Union

import torch
from pydantic import BaseModel, Field
from torch import nn

logger = logging.getLogger(__name__)

TensorFn = Callable[..., Union[torch.Tensor, Sequence[torch.Tensor]]]


class GradCheckReport(BaseModel):
    """Outcome of one gradient check"""
    max_rel_error: float = Field(..., ge=0.0)
    per_tensor: Dict[str, float] = Field(default_factory=dict)
    checked_entries: int = 0
    skipped_entries: int = Field(0, description="Entries at non-differentiable points")
    tol: float
    passed: bool

    def worst(self) -> str:
        if not self.per_tensor:
            return "-"
        return max(self.per_tensor, key=self.per_tensor.get)


def _flatten_outputs(out) -> torch.Tensor:
    if isinstance(out, torch.Tensor):
        return out.reshape(-1)
    if hasattr(out, "__dataclass_fields__"):
        out = [v for v in vars(out).values() if isinstance(v, torch.Tensor)]
    return torch.cat([o.reshape(-1) for o in out if o is not None])


def grad_check(
    fn: Union[nn.Module, TensorFn],
    inputs: Union[torch.Tensor, Sequence[torch.Tensor]],
    tol: float = 1e-4,
    step: float = 1e-5,
    projection: Literal["random", "sum"] = "random",
    max_samples: int = 64,
    kink_margin: float = 1e-4,
    check_inputs: bool = True,
    seed: int = 0,
) -> GradCheckReport:
    """
    Check gradients of ``fn`` at ``inputs``

    Modules are switched to float64 and eval mode (dropout off) for the
    duration of the check; the previous dtype and training flag are restored.

    Args:
        fn: module or function of the inputs
        inputs: tensor(s) the function is evaluated at (copied to float64)
        tol: maximum allowed relative error
        step: finite-difference step h
        projection: probe loss, see module docstring
        max_samples: entries checked per tensor (randomly chosen when larger)
        kink_margin: input entries closer than this to 0 are skipped (PReLU / ReLU kink)
        check_inputs: also check gradients with respect to the inputs

    Returns:
        GradCheckReport
    """
    if isinstance(inputs, torch.Tensor):
        inputs = [inputs]
    inputs = [x.detach().to(torch.float64).clone().requires_grad_(True) for x in inputs]

    was_training = None
    original_dtype = None
    named: List[Tuple[str, torch.Tensor]] = []
    if isinstance(fn, nn.Module):
        was_training = fn.training
        floating = [t for t in (*fn.parameters(), *fn.buffers()) if t.is_floating_point()]
        original_dtype = floating[0].dtype if floating else None
        fn.double().eval()
        named += [(name, p) for name, p in fn.named_parameters() if p.requires_grad]
    if check_inputs:
        named += [(f"input[{k}]", x) for k, x in enumerate(inputs)]

    try:
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            probe_shape = _flatten_outputs(fn(*inputs)).shape
        weights = torch.randn(probe_shape, generator=generator, dtype=torch.float64)
        if projection == "sum":
            weights = torch.ones_like(weights)

        def loss() -> torch.Tensor:
            return (weights * _flatten_outputs(fn(*inputs))).sum()

        analytic = torch.autograd.grad(loss(), [t for _, t in named], allow_unused=True)
        per_tensor: Dict[str, float] = {}
        checked = skipped = 0

        for (name, tensor), grad in zip(named, analytic):
            grad = torch.zeros_like(tensor) if grad is None else grad
            flat = tensor.data.view(-1)
            count = flat.numel()
            if count > max_samples:
                indices = torch.randperm(count, generator=generator)[:max_samples].tolist()
            else:
                indices = list(range(count))

            numeric, exact = [], []
            for i in indices:
                original = flat[i].item()
                if name.startswith("input") and abs(original) < kink_margin:
                    skipped += 1
                    continue
                with torch.no_grad():
                    flat[i] = original + step
                    upper = loss().item()
                    flat[i] = original - step
                    lower = loss().item()
                    flat[i] = original
                numeric.append((upper - lower) / (2.0 * step))
                exact.append(grad.reshape(-1)[i].item())
                checked += 1

            if not numeric:
                continue
            numeric_t = torch.tensor(numeric, dtype=torch.float64)
            exact_t = torch.tensor(exact, dtype=torch.float64)
            scale = max(numeric_t.norm().item(), exact_t.norm().item())
            per_tensor[name] = 0.0 if scale == 0.0 else (numeric_t - exact_t).norm().item() / scale
    finally:
        if original_dtype is not None:
            fn.to(original_dtype)
        if was_training:
            fn.train()

    max_error = max(per_tensor.values(), default=0.0)
    report = GradCheckReport(
        max_rel_error=max_error,
        per_tensor=per_tensor,
        checked_entries=checked,
        skipped_entries=skipped,
        tol=tol,
        passed=max_error < tol,
    )
    logger.debug(f"Gradient check: max rel. error {max_error:.2e} ({report.worst()}), {checked} entries")
    return report


class _ScaledBackward(torch.autograd.Function):
    """Identity forward, backward scaled by (1 + delta)"""

    @staticmethod
    def forward(ctx, x, delta):
        ctx.delta = delta
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad):
        return grad * (1.0 + ctx.delta), None


class GradientFault(nn.Module):
    """
    Wraps a module and corrupts its backward pass by a relative ``delta``

    Used by selfcheck to prove the checker catches a wrong gradient.
    """

    def __init__(self, module: nn.Module, delta: float = 1e-2):
        super().__init__()
        self.module = module
        self.delta = delta

    def forward(self, *inputs):
        return _ScaledBackward.apply(self.module(*inputs), self.delta)
