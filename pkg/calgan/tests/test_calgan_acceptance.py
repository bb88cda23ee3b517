"""Acceptance suite for the adversarial renderer: one test per release
criterion, each printing a [PASS]/[FAIL] line (visible with `pytest -s`)."""

from __future__ import annotations

import functools
import math

import pytest
import torch

from calgan.losses import d_loss, g_loss, gan_value
from calgan.model import (
    DiscriminatorConfig,
    GeneratorConfig,
    PatchDiscriminator,
    UNetGenerator,
    conv_layers,
)
from calgan.train import TrainConfig, train

from .conftest import write_pair_corpus


def criterion(name):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] {name}")
                raise
            print(f"[PASS] {name}")
        return wrapper
    return deco


@criterion("loss arithmetic: coin-flip value -1.38629 and exact lambda decomposition")
def test_loss_arithmetic():
    probs = torch.full((2, 1, 4, 4), 0.5, dtype=torch.float64)
    img = torch.full((2, 3, 8, 8), 0.25, dtype=torch.float64)
    value = float(gan_value(probs, probs, img, img.clone(), lam=100.0))
    assert value == pytest.approx(-1.38629, abs=1e-5)

    gen = torch.linspace(-1, 1, 96, dtype=torch.float64).reshape(2, 3, 4, 4)
    target = gen.roll(5, dims=-1)
    d_real = torch.full((2, 1, 2, 2), 0.8, dtype=torch.float64)
    d_fake = torch.full((2, 1, 2, 2), 0.35, dtype=torch.float64)
    l1 = float((target - gen).abs().mean())
    for lam in (1.0, 100.0, 777.25):
        full = float(gan_value(d_real, d_fake, gen, target, lam))
        base = float(gan_value(d_real, d_fake, gen, target, 0.0))
        assert full == pytest.approx(base + lam * l1, abs=1e-9)


@criterion("generator-loss gradients match central finite differences at 1e-4")
def test_gradient_check_small_model():
    torch.manual_seed(1)
    model = torch.nn.Linear(6, 12, dtype=torch.float64)  # 84 parameters
    assert sum(p.numel() for p in model.parameters()) <= 100
    z = torch.randn(4, 6, dtype=torch.float64)
    target = torch.randn(4, 1, 3, 4, dtype=torch.float64)
    probe = torch.randn(1, 3, 4, dtype=torch.float64)

    def loss_value() -> torch.Tensor:
        gen = torch.tanh(model(z)).reshape(4, 1, 3, 4)
        d = torch.sigmoid((gen * probe).mean(dim=(1, 2, 3), keepdim=True))
        return g_loss(d.reshape(4, 1, 1, 1), gen, target, lam=2.5)

    loss = loss_value()
    loss.backward()
    h = 1e-6
    for param in model.parameters():
        analytic = param.grad.view(-1)
        flat = param.data.view(-1)
        for idx in range(flat.numel()):
            original = float(flat[idx])
            flat[idx] = original + h
            plus = float(loss_value().detach())
            flat[idx] = original - h
            minus = float(loss_value().detach())
            flat[idx] = original
            numeric = (plus - minus) / (2 * h)
            ref = float(analytic[idx])
            scale = max(abs(ref), abs(numeric), 1e-8)
            assert abs(numeric - ref) / scale < 1e-4


@criterion("architecture contract: 4ch 256^2 -> 3ch 256^2, depths 8/4, 4x4 stride 2")
def test_shape_and_architecture_contract():
    gen_cfg = GeneratorConfig(base_width=8)
    disc_cfg = DiscriminatorConfig(base_width=8)
    assert gen_cfg.in_channels == 4 and gen_cfg.out_channels == 3
    torch.manual_seed(0)
    generator = UNetGenerator(gen_cfg)
    with torch.no_grad():
        out = generator(torch.randn(1, 4, 256, 256))
    assert tuple(out.shape) == (1, 3, 256, 256)
    assert len(generator.encoders) == 8
    discriminator = PatchDiscriminator(disc_cfg)
    assert len(conv_layers(discriminator)) == 4
    for layer in conv_layers(generator) + conv_layers(discriminator):
        assert layer.kernel_size == (4, 4)
        assert layer.stride == (2, 2)
    with pytest.raises(ValueError):
        GeneratorConfig(in_channels=3)
    with pytest.raises(ValueError):
        generator(torch.randn(1, 3, 256, 256))


@criterion("smoke training: 50 steps cut the L1 term; half gradient halves the D delta")
def test_smoke_training_and_half_gradient(tmp_path):
    gen_cfg = GeneratorConfig(base_width=8)
    disc_cfg = DiscriminatorConfig(base_width=8)
    manifest = write_pair_corpus(tmp_path / "pairs", n_pairs=16)
    result = train(manifest, gen_cfg, disc_cfg,
                   TrainConfig(steps=50, batch_size=4, seed=0))
    assert math.isfinite(result.l1_start) and math.isfinite(result.l1_end)
    assert result.l1_end < result.l1_start

    # Single-step delta comparison under a linear optimizer, where halving
    # every gradient must halve every parameter delta exactly.
    def one_step_deltas(scale: float):
        cfg = TrainConfig(steps=1, batch_size=4, seed=3, optimizer="sgd",
                          d_grad_scale=scale)
        torch.manual_seed(cfg.seed)
        UNetGenerator(gen_cfg)  # replicate train()'s RNG consumption order
        reference = PatchDiscriminator(disc_cfg)
        init = [p.detach().clone() for p in reference.parameters()]
        outcome = train(manifest, gen_cfg, disc_cfg, cfg)
        return [after.detach() - before
                for after, before in zip(outcome.discriminator.parameters(), init)]

    full = one_step_deltas(1.0)
    half = one_step_deltas(0.5)
    assert any(float(d.abs().max()) > 0 for d in full)
    for d_full, d_half in zip(full, half):
        assert torch.allclose(d_half, 0.5 * d_full, atol=1e-7, rtol=0)
