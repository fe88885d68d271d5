"""Replicate runner.

Replicate ``i`` always draws from ``stream.child(i)``, so results do not
depend on the worker count or on scheduling order.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

from .rng import RngStream


def _run_chunk(fn: Callable, stream: RngStream, start: int, stop: int, args: tuple) -> list:
    return [fn(stream.child(i), *args) for i in range(start, stop)]


def default_workers() -> int:
    return int(os.environ.get("BOOLPERC_WORKERS", "1"))


def run_replicates(fn: Callable, stream: RngStream, n_reps: int, args: tuple = (),
                   workers: int | None = None, chunk: int = 256) -> np.ndarray:
    """Evaluate ``fn(stream.child(i), *args)`` for ``i < n_reps`` and return the values in index order.

    ``fn`` must be a module-level function when ``workers > 1``.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    workers = default_workers() if workers is None else workers
    if workers <= 1 or n_reps <= chunk:
        return np.array(_run_chunk(fn, stream, 0, n_reps, args))
    bounds = [(s, min(s + chunk, n_reps)) for s in range(0, n_reps, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(_run_chunk, fn, stream, a, b, args) for a, b in bounds]
        out = []
        for f in futs:
            out.extend(f.result())
    return np.array(out)
