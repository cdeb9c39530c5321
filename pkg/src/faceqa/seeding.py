"""Seed derivation so per-item randomness does not depend on processing order."""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from arbitrary parts (not Python's salted ``hash``)."""
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest()[:8], "big")


def rng_for(*parts: object) -> random.Random:
    return random.Random(derive_seed(*parts))
