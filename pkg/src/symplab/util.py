"""Shared helpers: deterministic parallel map, random generator, box grids."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np


def default_workers():
    return os.cpu_count() or 1


def parallel_map(fn, items, workers=1):
    """``[fn(x) for x in items]`` with optional process parallelism; order is preserved."""
    items = list(items)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def make_rng(seed):
    """The single random source: numpy's PCG64 bit generator seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def box_grid(lo, hi, per_axis):
    """Cell-centred uniform grid in the box ``[lo, hi]``; shape ``(per_axis^dim, dim)``."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    axes = [lo[i] + (np.arange(per_axis) + 0.5) * (hi[i] - lo[i]) / per_axis for i in range(len(lo))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def box_lattice(lo, hi, per_axis):
    """Uniform grid including the lower corner: ``lo + i (hi - lo) / per_axis``."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    axes = [lo[i] + np.arange(per_axis) * (hi[i] - lo[i]) / per_axis for i in range(len(lo))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def chunks(n, size):
    return [(i, min(i + size, n)) for i in range(0, n, size)]


def plain(x):
    """Recursively convert numpy scalars/arrays, fractions and complex numbers
    to JSON-friendly builtins; non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return plain(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.complexfloating, complex)):
        return [plain(x.real), plain(x.imag)]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return repr(v) if math.isnan(v) or math.isinf(v) else v
    if isinstance(x, Fraction):
        return str(x)
    return x
