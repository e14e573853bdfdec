"""Seed derivation and small execution helpers.

Every stochastic component of the pipeline draws its randomness from a
``numpy.random.Generator`` seeded through :func:`derive_seed`, so results are
a pure function of the user-supplied master seed.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def stable_hash(text: str) -> int:
    """Platform-independent 63-bit hash of a string (unlike builtin hash)."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def derive_seed(*parts: int | str) -> int:
    """Derive a 64-bit child seed from a tuple of integers and/or labels."""
    entropy = [stable_hash(p) if isinstance(p, str) else int(p) for p in parts]
    seq = np.random.SeedSequence(entropy)
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def rng_from(*parts: int | str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


def parallel_map(fn: Callable[[T], R], jobs: Sequence[T], workers: int = 1) -> list[R]:
    """Apply ``fn`` to every job, optionally on a thread pool.

    Results come back in job order regardless of scheduling, so callers see
    output identical to a sequential pass.
    """
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def monotone_history(history: Iterable[tuple[int, float]]) -> bool:
    """Check the run-history invariant: evals strictly up, loss never up."""
    prev_e, prev_l = 0, float("inf")
    for evals, loss in history:
        if evals <= prev_e or loss > prev_l:
            return False
        prev_e, prev_l = evals, loss
    return True
