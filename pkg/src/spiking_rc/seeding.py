"""Deterministic sub-seed derivation.

Every stage of an experiment draws its randomness from a sub-seed derived
from one master seed. The derivation is::

    sub_seed = int.from_bytes(sha256(f"{master}:{stage}").digest()[:8], "little")

so stages are decorrelated and the mapping is stable across platforms and
Python versions (unlike ``hash()``).
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, stage: str) -> int:
    digest = hashlib.sha256(f"{int(master)}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def stage_rng(master: int, stage: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, stage))
