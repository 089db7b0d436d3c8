"""Deterministic seed derivation for independent random substreams.

Substreams are keyed by arbitrary parts (run seed, story name, window index,
...) so that sampling is reproducible and independent of evaluation order.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: object) -> int:
    data = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def derive_rng(*parts: object) -> random.Random:
    return random.Random(derive_seed(*parts))


def content_id(prefix: str, tokens: tuple[str, ...] | list[str]) -> str:
    """Stable short identifier derived from a sorted token sequence."""
    data = "\x1f".join(tokens).encode("utf-8")
    return prefix + hashlib.blake2b(data, digest_size=8).hexdigest()
