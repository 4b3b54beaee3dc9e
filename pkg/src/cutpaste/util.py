"""Shared numeric helpers: rising factorials, word encoding, RNG streams."""

from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction

import numpy as np

# State spaces are enumerable up to this many words; dense kernels get a
# tighter cap because they allocate (k^n)^2 floats.
STATE_SPACE_LIMIT = 1 << 20
DENSE_KERNEL_LIMIT = 4096

RNG_NAME = "numpy PCG64 (streams spawned via SeedSequence per replica index)"


def check_state_space(k: int, n: int, dense: bool = False) -> int:
    """Return k**n, raising if the state space is too large to handle."""
    size = k**n
    limit = DENSE_KERNEL_LIMIT if dense else STATE_SPACE_LIMIT
    if size > limit:
        raise ValueError(
            f"state space too large: {k}^{n} = {size} exceeds limit {limit}"
        )
    return size


def rising_log(a: float, m: int) -> float:
    """log of the rising factorial a(a+1)...(a+m-1), for a > 0."""
    if m == 0:
        return 0.0
    if a <= 0:
        raise ValueError("rising factorial in log space needs a > 0")
    return math.lgamma(a + m) - math.lgamma(a)


def rising_fraction(a: Fraction, m: int) -> Fraction:
    """Exact rising factorial a(a+1)...(a+m-1) over the rationals."""
    out = Fraction(1)
    for j in range(m):
        out *= a + j
    return out


def falling(k: int, j: int) -> int:
    """Falling factorial k(k-1)...(k-j+1)."""
    out = 1
    for i in range(j):
        out *= k - i
    return out


def as_fraction(a) -> Fraction:
    if isinstance(a, Fraction):
        return a
    if isinstance(a, int):
        return Fraction(a)
    if isinstance(a, float):
        if not a.is_integer():
            raise ValueError(
                "exact mode needs a rational concentration; pass int or Fraction"
            )
        return Fraction(int(a))
    raise TypeError(f"cannot treat {type(a).__name__} as a rational")


def enumerate_words(k: int, n: int) -> np.ndarray:
    """All words of length n over colors 1..k, lexicographic, shape (k^n, n)."""
    size = check_state_space(k, n)
    words = np.empty((size, n), dtype=np.int64)
    for j in range(n):
        block = k ** (n - 1 - j)
        col = np.repeat(np.arange(1, k + 1, dtype=np.int64), block)
        words[:, j] = np.tile(col, size // (block * k))
    return words


def encode_words(words: np.ndarray, k: int) -> np.ndarray:
    """Map words (..., n) with entries 1..k to lexicographic indices."""
    words = np.asarray(words, dtype=np.int64)
    n = words.shape[-1]
    powers = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (words - 1) @ powers


def decode_codes(codes: np.ndarray, k: int, n: int) -> np.ndarray:
    """Inverse of encode_words: indices to words (..., n)."""
    codes = np.asarray(codes, dtype=np.int64)
    out = np.empty(codes.shape + (n,), dtype=np.int64)
    rem = codes.copy()
    for j in range(n - 1, -1, -1):
        out[..., j] = rem % k + 1
        rem //= k
    return out


def spawn_generators(seed, count: int) -> list[np.random.Generator]:
    """Independent PCG64 streams, one per replica index."""
    seq = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(s)) for s in seq.spawn(count)]


def config_digest(config: dict) -> str:
    """Stable digest of a resolved configuration mapping."""
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def format_float(x: float) -> str:
    """Canonical, reproducible float formatting for CSV bodies."""
    return format(float(x), ".17g")
