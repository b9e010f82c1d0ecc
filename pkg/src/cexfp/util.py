"""Seeding, hashing, and small shared helpers.

All floating point state in this package is float64 (``DTYPE``).  Sub-seeds
are derived from a master seed by hashing the master together with string
tags, so any stage of a pipeline can be rerun independently and still land
on the same stream.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

DTYPE = np.float64


def derive_seed(master: int, *parts) -> int:
    """Mix a master seed and tags into a stable 64-bit sub-seed.

    The mixing rule is sha256 over ``"<master>/<part>/<part>..."``; the first
    eight digest bytes (little-endian) become the sub-seed.
    """
    text = "/".join([str(int(master)), *map(str, parts)])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def make_rng(seed) -> np.random.Generator:
    """Return a PCG64 generator; passes through an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def default_jobs() -> int:
    return os.cpu_count() or 1


def parallel_map(fn, items, jobs: int | None = None) -> list:
    """Map ``fn`` over ``items``, optionally across processes.

    Results come back in input order regardless of scheduling, so callers
    stay deterministic.  ``jobs=1`` (or a single item) runs inline.
    """
    items = list(items)
    if jobs is None:
        jobs = default_jobs()
    jobs = max(1, min(int(jobs), len(items) or 1))
    if jobs == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def check_finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"non-finite values in {what}")
    return arr
