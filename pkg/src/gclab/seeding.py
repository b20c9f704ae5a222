"""Deterministic derivation of per-component RNG streams from one root seed."""
from __future__ import annotations

import hashlib

import numpy as np

_SEED_SPACE = 2**63


def derive_seed(root: int, label: str) -> int:
    """Derive a child seed from a root seed and a purpose label.

    Uses SHA-256 so the mapping is stable across platforms and Python
    versions; the same (root, label) pair always yields the same child.
    """
    digest = hashlib.sha256(f"{root}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") % _SEED_SPACE


def rng_for(root: int, label: str) -> np.random.Generator:
    """Independent generator for one component of a seeded computation."""
    return np.random.default_rng(derive_seed(root, label))
