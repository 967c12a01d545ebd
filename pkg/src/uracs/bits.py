"""Bit-vector helpers.

Bit vectors are 1-D ``uint8`` arrays with values in {0, 1}, most significant
bit first. A fragment's integer index is its radix-2 value under that order.
"""

from __future__ import annotations

import numpy as np


def bits_to_int(bits: np.ndarray) -> int:
    """Radix-2 value of a bit vector, MSB first."""
    bits = np.asarray(bits)
    weights = 1 << np.arange(bits.shape[-1] - 1, -1, -1, dtype=np.int64)
    return int(bits.astype(np.int64) @ weights)


def rows_to_ints(rows: np.ndarray) -> np.ndarray:
    """Vectorised bits_to_int over the rows of a 2-D bit array."""
    rows = np.asarray(rows)
    weights = 1 << np.arange(rows.shape[-1] - 1, -1, -1, dtype=np.int64)
    return rows.astype(np.int64) @ weights


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Bit vector (MSB first) of ``value``, zero-padded to ``width`` bits."""
    if value < 0 or value >= (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((value >> shifts) & 1).astype(np.uint8)


def ints_to_rows(values: np.ndarray, width: int) -> np.ndarray:
    """Vectorised int_to_bits; returns a (len(values), width) uint8 array."""
    values = np.asarray(values, dtype=np.int64).reshape(-1, 1)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((values >> shifts) & 1).astype(np.uint8)


def random_bits(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. Bernoulli(1/2) bits."""
    return rng.integers(0, 2, size=shape, dtype=np.uint8)
