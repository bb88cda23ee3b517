"""Alternating adversarial training over a pair corpus.

Each mini-batch takes one discriminator step and then one generator step.
The discriminator objective carries a 0.5 factor ("half gradient") to slow
its learning; there is no noise input, so generation is deterministic and
the whole run is reproducible from (manifest, configs, seed).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import torch

from .data import PairDataset, read_pair_manifest
from .losses import d_loss, g_loss
from .model import DiscriminatorConfig, GeneratorConfig, PatchDiscriminator, UNetGenerator

__all__ = ["TrainConfig", "TrainResult", "train", "save_checkpoint", "load_checkpoint"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lambda_l1: float = 100.0
    learning_rate: float = 0.0002
    beta1: float = 0.5
    beta2: float = 0.999
    d_grad_scale: float = 0.5
    batch_size: int = 4
    steps: int = 200
    seed: int = 0
    optimizer: str = "adam"  # "sgd" isolates the half-gradient effect exactly

    def __post_init__(self) -> None:
        if self.lambda_l1 < 0:
            raise ValueError("lambda_l1 must be >= 0")
        if not 0 < self.d_grad_scale <= 1:
            raise ValueError("d_grad_scale must lie in (0, 1]")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class TrainResult:
    generator: UNetGenerator
    discriminator: PatchDiscriminator
    gen_config: GeneratorConfig
    disc_config: DiscriminatorConfig
    train_config: TrainConfig
    l1_start: float
    l1_end: float
    history: list[dict]


def _make_optimizer(params, cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return torch.optim.SGD(params, lr=cfg.learning_rate)
    return torch.optim.Adam(params, lr=cfg.learning_rate, betas=(cfg.beta1, cfg.beta2))


def _batch_indices(n: int, batch_size: int, steps: int, seed: int) -> list[list[int]]:
    """Seed-pinned batch order: reshuffle every epoch, slice into batches."""
    gen = torch.Generator().manual_seed(seed)
    batches: list[list[int]] = []
    order: list[int] = []
    while len(batches) < steps:
        if len(order) < batch_size:
            order = torch.randperm(n, generator=gen).tolist() + order
        batches.append(order[:batch_size])
        order = order[batch_size:]
    return batches


def train(
    pair_manifest: str | Path,
    gen_config: GeneratorConfig = GeneratorConfig(),
    disc_config: DiscriminatorConfig = DiscriminatorConfig(),
    train_config: TrainConfig = TrainConfig(),
) -> TrainResult:
    samples = read_pair_manifest(pair_manifest)
    dataset = PairDataset(samples, gen_config.resolution)

    torch.manual_seed(train_config.seed)
    generator = UNetGenerator(gen_config)
    discriminator = PatchDiscriminator(disc_config)
    opt_g = _make_optimizer(generator.parameters(), train_config)
    opt_d = _make_optimizer(discriminator.parameters(), train_config)

    batches = _batch_indices(len(dataset), train_config.batch_size,
                             train_config.steps, train_config.seed)

    l1_start = None
    history = []
    for step, indices in enumerate(batches):
        x, y, _ = dataset.batch(indices)
        rgb = x[:, :3]
        mask = x[:, 3:4]

        # D step on (real, fake-detached), objective scaled by d_grad_scale
        fake = generator(x)
        d_real = discriminator(rgb, mask, y)
        d_fake = discriminator(rgb, mask, fake.detach())
        loss_d = d_loss(d_real, d_fake, train_config.d_grad_scale)
        opt_d.zero_grad()
        loss_d.backward()
        opt_d.step()

        # G step: non-saturating adversarial term + weighted L1
        d_fake_on_g = discriminator(rgb, mask, fake)
        loss_g = g_loss(d_fake_on_g, fake, y, train_config.lambda_l1)
        opt_g.zero_grad()
        loss_g.backward()
        opt_g.step()

        l1 = float((y - fake).abs().mean().detach())
        if l1_start is None:
            l1_start = l1
        if not (torch.isfinite(loss_d) and torch.isfinite(loss_g)):
            raise RuntimeError(f"non-finite loss at step {step}")
        history.append({"step": step, "d_loss": float(loss_d.detach()),
                        "g_loss": float(loss_g.detach()), "l1": l1})

    return TrainResult(
        generator=generator,
        discriminator=discriminator,
        gen_config=gen_config,
        disc_config=disc_config,
        train_config=train_config,
        l1_start=l1_start if l1_start is not None else 0.0,
        l1_end=history[-1]["l1"] if history else 0.0,
        history=history,
    )


def save_checkpoint(result: TrainResult, path: str | Path) -> None:
    """Self-describing checkpoint: weights plus every config and the seed."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "format": "calgan-checkpoint",
        "version": 1,
        "generator_state": result.generator.state_dict(),
        "discriminator_state": result.discriminator.state_dict(),
        "gen_config": asdict(result.gen_config),
        "disc_config": asdict(result.disc_config),
        "train_config": asdict(result.train_config),
        "seed": result.train_config.seed,
        "l1_start": result.l1_start,
        "l1_end": result.l1_end,
    }, path)


def load_checkpoint(path: str | Path) -> tuple[UNetGenerator, dict]:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    if blob.get("format") != "calgan-checkpoint":
        raise ValueError(f"{path} is not a calgan checkpoint")
    gen_config = GeneratorConfig(**blob["gen_config"])
    generator = UNetGenerator(gen_config)
    generator.load_state_dict(blob["generator_state"])
    generator.eval()
    return generator, blob
