"""Phase samplers for integrals over the circle and a thread-count-invariant reduction.

Work is cut into fixed-size blocks of phases whatever the thread count, each
block is computed independently, and sums run over a fixed binary tree.
The same inputs therefore give bit-identical output for any ``threads``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

BLOCK = 256
KINDS = ("equispaced_grid", "orbit_birkhoff", "stratified_random")


@dataclass(frozen=True)
class PhaseSampler:
    """Discretization of dx on the circle.

    ``offset=None`` means the default irrational offset (sqrt5 - 1) / (2 count),
    which keeps grid points off the orbits of the usual frequencies.
    """

    kind: str = "equispaced_grid"
    count: int = 2048
    offset: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}; expected one of {KINDS}")
        if self.count < 1:
            raise ValueError("sampler count must be positive")

    @property
    def start(self):
        if self.offset is None:
            return (math.sqrt(5.0) - 1.0) / (2.0 * self.count)
        return float(self.offset)

    def phases(self, omega=None):
        if self.kind == "equispaced_grid":
            return np.mod(self.start + np.arange(self.count) / self.count, 1.0)
        if self.kind == "orbit_birkhoff":
            if omega is None:
                raise ValueError("orbit_birkhoff sampling needs the frequency omega")
            out = np.empty(self.count)
            y = self.start % 1.0
            for k in range(self.count):
                out[k] = y
                y += omega
                y -= math.floor(y)
            return out
        rng = np.random.default_rng(self.seed)
        return (np.arange(self.count) + rng.random(self.count)) / self.count


def resolve_threads(threads):
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return int(threads)


def map_blocks(func, phases, threads=None):
    """Apply ``func`` to consecutive BLOCK-sized slices of ``phases``.

    Returns the list of per-block results in phase order.
    """
    phases = np.ascontiguousarray(phases, dtype=float)
    slices = [phases[i:i + BLOCK] for i in range(0, len(phases), BLOCK)]
    threads = resolve_threads(threads)
    if threads == 1 or len(slices) <= 1:
        return [func(s) for s in slices]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, slices))


def tree_sum(values, axis=-1):
    """Pairwise sum over a fixed binary tree along ``axis``."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    if v.shape[-1] == 0:
        return np.zeros(v.shape[:-1]) if v.ndim > 1 else 0.0
    while v.shape[-1] > 1:
        if v.shape[-1] % 2:
            v = np.concatenate([v, np.zeros(v.shape[:-1] + (1,))], axis=-1)
        v = v[..., 0::2] + v[..., 1::2]
    out = v[..., 0]
    return out if out.ndim else float(out)


def masked_mean(values, valid):
    """Mean and standard error over entries where ``valid`` is True.

    ``values`` may carry leading axes; ``valid`` matches its last axis.
    """
    values = np.asarray(values, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    k = int(valid.sum())
    if k == 0:
        shape = values.shape[:-1]
        nan = np.full(shape, np.nan) if shape else math.nan
        return nan, nan
    clean = np.where(valid, values, 0.0)
    mean = tree_sum(clean) / k
    mean_b = np.asarray(mean)[..., None]
    dev = np.where(valid, values - mean_b, 0.0)
    var = tree_sum(dev * dev) / max(k - 1, 1)
    return mean, np.sqrt(var / k)
