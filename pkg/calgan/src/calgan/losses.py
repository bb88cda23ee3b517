"""Adversarial value function and the generator/discriminator objectives.

The joint value is the conditional-GAN objective plus a weighted L1 pixel
term; the generator trains on the non-saturating form (maximize log D on
fakes) and the discriminator's objective is scaled to slow its learning.
"""

from __future__ import annotations

import logging

import torch

__all__ = ["gan_value", "g_loss", "d_loss", "PROB_EPS"]

log = logging.getLogger(__name__)

PROB_EPS = 1e-7


def _clamped_log(probs: torch.Tensor, name: str) -> torch.Tensor:
    lo, hi = PROB_EPS, 1.0 - PROB_EPS
    if bool((probs < lo).any()) or bool((probs > hi).any()):
        log.info("clamping %s probabilities to [%g, %g]", name, lo, hi)
        probs = probs.clamp(lo, hi)
    return torch.log(probs)


def gan_value(
    d_real: torch.Tensor,
    d_fake: torch.Tensor,
    gen_out: torch.Tensor,
    target: torch.Tensor,
    lam: float,
) -> torch.Tensor:
    """Joint objective: mean log D(x,y) + mean log(1 - D(x,G(x))) + lam * L1.

    G minimizes it, D maximizes it.  Probabilities at exactly 0 or 1 are
    clamped to eps so the logs stay finite.  With lam = 0 this is the plain
    conditional-GAN value.
    """
    if gen_out.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(gen_out.shape)} vs {tuple(target.shape)}")
    value = _clamped_log(d_real, "d_real").mean() + _clamped_log(1.0 - d_fake, "1-d_fake").mean()
    if lam != 0.0:
        value = value + lam * (target - gen_out).abs().mean()
    return value


def g_loss(
    d_fake_on_g: torch.Tensor,
    gen_out: torch.Tensor,
    target: torch.Tensor,
    lam: float,
) -> torch.Tensor:
    """Non-saturating generator loss: -mean log D(x,G(x)) + lam * L1."""
    if gen_out.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(gen_out.shape)} vs {tuple(target.shape)}")
    loss = -_clamped_log(d_fake_on_g, "d_fake_on_g").mean()
    if lam != 0.0:
        loss = loss + lam * (target - gen_out).abs().mean()
    return loss


def d_loss(d_real: torch.Tensor, d_fake: torch.Tensor, grad_scale: float = 0.5) -> torch.Tensor:
    """Discriminator loss (to minimize), scaled by grad_scale.

    Multiplying the objective by 0.5 is how "half gradient" is applied: the
    backward pass then produces exactly half of every D gradient.
    """
    value = _clamped_log(d_real, "d_real").mean() + _clamped_log(1.0 - d_fake, "d_fake").mean()
    return -grad_scale * value
