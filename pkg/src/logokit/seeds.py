"""Per-item seed derivation: one global seed fans out to independent streams.

Every random draw in the toolkit flows from a single 64-bit seed through
derive_rng(seed, *scope), where the scope names the item (class name, record
index, source tag, ...).  Item streams are therefore independent of scheduling
and of whether sibling items were computed at all.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_rng", "derive_seed"]


def _scope_entropy(part: int | str) -> int:
    if isinstance(part, int):
        return part & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(part.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_seed(seed: int, *scope: int | str) -> np.random.SeedSequence:
    """Stable SeedSequence for (seed, scope) across platforms and runs."""
    return np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF] + [_scope_entropy(s) for s in scope])


def derive_rng(seed: int, *scope: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *scope))
