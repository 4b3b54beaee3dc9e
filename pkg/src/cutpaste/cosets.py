"""Coset decompositions acting as self-maps of coloring space.

A k-coloring of [nk] splits into k interleaved cosets; the tuple acts on
colorings of [n] by sending coordinate j to entry j of coset x^j.  The
identity map is the repeating pattern 12...k, single-index flips touch one
cell, and the empirical matrix frequency of a map is row-stochastic.
"""

from __future__ import annotations

import numpy as np

from .coloring import Coloring

__all__ = [
    "StochasticMatrix",
    "CosetMap",
    "as_stochastic",
    "injection_indices",
    "apply_coset_map",
    "compose",
    "matrix_frequency",
    "single_flip",
]


class StochasticMatrix:
    """A k x k row-stochastic matrix (rows sum to 1 within 1e-12)."""

    __slots__ = ("a", "_cum")

    ROW_SUM_TOL = 1e-12

    def __init__(self, entries):
        arr = np.asarray(entries, dtype=np.float64).copy()
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("stochastic matrix must be square")
        if arr.min() < 0:
            raise ValueError("stochastic matrix entries must be nonnegative")
        if np.abs(arr.sum(axis=1) - 1.0).max() > self.ROW_SUM_TOL:
            raise ValueError("rows must sum to 1 within 1e-12")
        arr.flags.writeable = False
        object.__setattr__(self, "a", arr)
        object.__setattr__(self, "_cum", None)

    def __setattr__(self, name, value):
        raise AttributeError("StochasticMatrix is immutable")

    @property
    def k(self) -> int:
        return self.a.shape[0]

    @property
    def s_star(self) -> float:
        """Smallest diagonal entry; lies in [0, 1]."""
        return float(self.a.diagonal().min())

    @property
    def cum(self) -> np.ndarray:
        """Row cumulative sums with the last column pinned to 1 (sampling helper)."""
        if self._cum is None:
            c = np.cumsum(self.a, axis=1)
            c[:, -1] = 1.0
            c.flags.writeable = False
            object.__setattr__(self, "_cum", c)
        return self._cum

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.a, np.eye(self.k)))

    def is_zero_one(self) -> bool:
        return bool(np.isin(self.a, (0.0, 1.0)).all())

    @classmethod
    def identity(cls, k: int) -> "StochasticMatrix":
        return cls(np.eye(k))

    def __repr__(self) -> str:
        return f"StochasticMatrix({self.a.tolist()!r})"


def as_stochastic(S) -> StochasticMatrix:
    return S if isinstance(S, StochasticMatrix) else StochasticMatrix(S)


class CosetMap:
    """k words of length n over {1..k}; coset i holds the images of color i."""

    __slots__ = ("k", "n", "cosets")

    def __init__(self, k: int, cosets):
        arr = np.asarray(cosets, dtype=np.int64).copy()
        if arr.ndim != 2 or arr.shape[0] != k:
            raise ValueError(f"cosets must be a ({k}, n) array")
        if arr.size and (arr.min() < 1 or arr.max() > k):
            raise ValueError(f"coset entries must lie in 1..{k}")
        arr.flags.writeable = False
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "n", int(arr.shape[1]))
        object.__setattr__(self, "cosets", arr)

    def __setattr__(self, name, value):
        raise AttributeError("CosetMap is immutable")

    @classmethod
    def identity(cls, k: int, n: int) -> "CosetMap":
        cosets = np.repeat(np.arange(1, k + 1, dtype=np.int64)[:, None], n, axis=1)
        return cls(k, cosets)

    @classmethod
    def from_flat(cls, word, k: int) -> "CosetMap":
        """Rebuild from the flat coloring of [nk] with M^{i+(j-1)k} = M_i^j."""
        word = np.asarray(word, dtype=np.int64)
        if word.size % k:
            raise ValueError("flat word length must be a multiple of k")
        return cls(k, word.reshape(-1, k).T)

    def flat(self) -> np.ndarray:
        """The equivalent coloring of [nk]: position i+(j-1)k holds coset i entry j."""
        return self.cosets.T.reshape(-1).copy()

    def restrict(self, m: int) -> "CosetMap":
        if not 0 <= m <= self.n:
            raise ValueError(f"cannot restrict length-{self.n} map to [{m}]")
        return CosetMap(self.k, self.cosets[:, :m])

    def apply(self, x: Coloring) -> Coloring:
        return apply_coset_map(self, x)

    def is_identity(self) -> bool:
        ident = np.arange(1, self.k + 1, dtype=np.int64)[:, None]
        return bool(np.array_equal(self.cosets, np.broadcast_to(ident, self.cosets.shape)))

    def to_lines(self) -> list[str]:
        """One row of color symbols per coset."""
        return ["".join(str(int(c)) for c in row) for row in self.cosets]

    @classmethod
    def from_lines(cls, lines) -> "CosetMap":
        rows = [[int(ch) for ch in line.strip()] for line in lines]
        return cls(len(rows), rows)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CosetMap)
            and self.k == other.k
            and np.array_equal(self.cosets, other.cosets)
        )

    def __hash__(self) -> int:
        return hash((self.k, self.n, self.cosets.tobytes()))

    def __repr__(self) -> str:
        return f"CosetMap(k={self.k}, n={self.n})"


def injection_indices(x: Coloring) -> np.ndarray:
    """1-based flat positions x^j + (j-1)k read by the action of a map on x."""
    return x.word + np.arange(x.n, dtype=np.int64) * x.k


def apply_coset_map(M: CosetMap, x: Coloring) -> Coloring:
    """Coordinate j of the image is entry j of coset x^j."""
    if M.k != x.k:
        raise ValueError("map and coloring must share k")
    if x.n > M.n:
        raise ValueError(f"map of length {M.n} cannot act on a length-{x.n} coloring")
    return Coloring(x.k, M.cosets[x.word - 1, np.arange(x.n)])


def compose(m2: CosetMap, m1: CosetMap) -> CosetMap:
    """Map acting as m1 followed by m2 (shared k and n required)."""
    if m2.k != m1.k or m2.n != m1.n:
        raise ValueError("composition needs matching k and n")
    return CosetMap(m1.k, m2.cosets[m1.cosets - 1, np.arange(m1.n)])


def single_flip(k: int, coordinate: int, i: int, i2: int, n: int | None = None) -> CosetMap:
    """The map fixing everything except the given coordinate, where i becomes i2."""
    if i == i2:
        raise ValueError("a flip must change the color (i != i2)")
    if not (1 <= i <= k and 1 <= i2 <= k):
        raise ValueError(f"colors must lie in 1..{k}")
    if n is None:
        n = coordinate
    if not 1 <= coordinate <= n:
        raise ValueError(f"coordinate must lie in 1..{n}")
    M = CosetMap.identity(k, n).cosets.copy()
    M[i - 1, coordinate - 1] = i2
    return CosetMap(k, M)


def matrix_frequency(M: CosetMap) -> StochasticMatrix:
    """Empirical per-coset color fractions as a stochastic matrix."""
    if M.n == 0:
        raise ValueError("matrix frequency of an empty map is undefined")
    counts = np.stack(
        [np.bincount(row, minlength=M.k + 1)[1:] for row in M.cosets]
    )
    return StochasticMatrix(counts / M.n)
