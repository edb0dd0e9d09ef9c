"""Deterministic random-stream derivation.

Every random decision in the project flows from a root seed through named
sub-streams so that two runs with the same config are byte-identical.
Python's built-in ``hash`` is salted per process and must never be used
for seeding; we derive stream seeds from SHA-256 instead.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: object) -> int:
    """Collapse a tuple of labels/ints into a stable 64-bit seed."""
    key = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def substream(*parts: object) -> random.Random:
    """A fresh ``random.Random`` seeded from the named sub-stream."""
    return random.Random(derive_seed(*parts))
