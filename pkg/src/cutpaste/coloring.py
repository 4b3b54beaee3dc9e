"""Finite k-colorings and bounded-block partitions.

A k-coloring of [n] is a word over the colors {1..k}; a partition of [n]
with at most k blocks is stored in canonical order-of-least-element form.
Both carry the restriction/relabeling operations, the prefix ultrametric,
and empirical frequency projections into the simplex.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .util import check_state_space

__all__ = [
    "Coloring",
    "Partition",
    "FrequencyVector",
    "Codec",
    "DNA",
    "project_to_partition",
    "symmetric_associate",
    "relabel",
    "distance",
    "empirical_frequency",
    "enumerate_partitions",
    "read_sequence_array",
]


class Coloring:
    """A word over {1..k}: the restriction of a k-coloring to [n].

    Immutable; the word array is read-only and safe to share.
    """

    __slots__ = ("k", "word")

    def __init__(self, k: int, word):
        if k < 1:
            raise ValueError("color count k must be >= 1")
        arr = np.asarray(word, dtype=np.int64).copy()
        if arr.ndim != 1:
            raise ValueError("word must be one-dimensional")
        if arr.size and (arr.min() < 1 or arr.max() > k):
            raise ValueError(f"word entries must lie in 1..{k}")
        arr.flags.writeable = False
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "word", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Coloring is immutable")

    @classmethod
    def from_string(cls, s: str, k: int | None = None) -> "Coloring":
        word = [int(ch) for ch in s]
        if k is None:
            k = max(word) if word else 1
        return cls(k, word)

    def to_string(self) -> str:
        return "".join(str(int(c)) for c in self.word)

    @property
    def n(self) -> int:
        return self.word.size

    def __len__(self) -> int:
        return self.word.size

    def restrict(self, m: int) -> "Coloring":
        """Length-m prefix; requires m <= n."""
        if not 0 <= m <= self.n:
            raise ValueError(f"cannot restrict length-{self.n} word to [{m}]")
        return Coloring(self.k, self.word[:m])

    def recolor(self, gamma) -> "Coloring":
        """Apply a color permutation gamma (sequence with gamma[i-1] = new color of i)."""
        gamma = np.asarray(gamma, dtype=np.int64)
        if sorted(gamma.tolist()) != list(range(1, self.k + 1)):
            raise ValueError("gamma must be a permutation of 1..k")
        return Coloring(self.k, gamma[self.word - 1])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Coloring)
            and self.k == other.k
            and np.array_equal(self.word, other.word)
        )

    def __hash__(self) -> int:
        return hash((self.k, self.word.tobytes()))

    def __repr__(self) -> str:
        body = self.to_string() if self.n <= 32 else self.to_string()[:29] + "..."
        return f"Coloring(k={self.k}, word={body!r}, n={self.n})"


class Partition:
    """A partition of [n] with at most k blocks, in canonical form.

    Blocks are sorted internally and listed in order of least element;
    equality is structural equality of the canonical form.
    """

    __slots__ = ("n", "k", "blocks", "_rgs")

    def __init__(self, n: int, blocks, k: int | None = None):
        norm = tuple(tuple(sorted(int(i) for i in b)) for b in blocks if len(b))
        norm = tuple(sorted(norm, key=lambda b: b[0]))
        seen: set[int] = set()
        for b in norm:
            for i in b:
                if i in seen:
                    raise ValueError(f"element {i} appears in two blocks")
                seen.add(i)
        if seen != set(range(1, n + 1)):
            raise ValueError(f"blocks must cover 1..{n} exactly")
        if k is None:
            k = len(norm)
        if len(norm) > k:
            raise ValueError(f"partition has {len(norm)} blocks, exceeding k={k}")
        rgs = np.zeros(n, dtype=np.int64)
        for label, b in enumerate(norm, start=1):
            for i in b:
                rgs[i - 1] = label
        rgs.flags.writeable = False
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "blocks", norm)
        object.__setattr__(self, "_rgs", rgs)

    def __setattr__(self, name, value):
        raise AttributeError("Partition is immutable")

    @classmethod
    def from_string(cls, s: str, k: int | None = None) -> "Partition":
        """Parse "12|3" style; use commas inside blocks once elements reach 10."""
        comma_mode = "," in s
        blocks = []
        for part in s.split("|"):
            part = part.strip()
            if comma_mode:
                blocks.append([int(tok) for tok in part.split(",")])
            else:
                blocks.append([int(ch) for ch in part])
        n = max(max(b) for b in blocks)
        return cls(n, blocks, k=k)

    def to_string(self) -> str:
        sep = "," if self.n >= 10 else ""
        return "|".join(sep.join(str(i) for i in b) for b in self.blocks)

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    def labels(self) -> np.ndarray:
        """Block index (1-based, order of least element) of each element."""
        return self._rgs

    def restrict(self, m: int) -> "Partition":
        if not 0 <= m <= self.n:
            raise ValueError(f"cannot restrict partition of [{self.n}] to [{m}]")
        blocks = [[i for i in b if i <= m] for b in self.blocks]
        return Partition(m, [b for b in blocks if b], k=self.k)

    def relabel(self, sigma) -> "Partition":
        """i ~ j in the result iff sigma(i) ~ sigma(j) here."""
        sigma = _check_permutation(sigma, self.n)
        inv = np.empty(self.n, dtype=np.int64)
        inv[sigma - 1] = np.arange(1, self.n + 1)
        return Partition(self.n, [[int(inv[i - 1]) for i in b] for b in self.blocks], k=self.k)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Partition)
            and self.n == other.n
            and self.blocks == other.blocks
        )

    def __hash__(self) -> int:
        return hash((self.n, self.blocks))

    def __repr__(self) -> str:
        return f"Partition({self.to_string()!r}, n={self.n}, k={self.k})"


@dataclass(frozen=True)
class FrequencyVector:
    """Point in the (k-1)-simplex, tagged exact or empirical.

    Empirical vectors carry their sample size so downstream checks can pick
    tolerances (sampling error is O(n^{-1/2}) for exchangeable inputs).
    """

    entries: np.ndarray
    flag: str = "exact"
    sample_size: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.float64).copy()
        if arr.ndim != 1:
            raise ValueError("frequency vector must be one-dimensional")
        if arr.min() < -1e-12:
            raise ValueError("frequencies must be nonnegative")
        tol = 1e-12
        if self.flag == "empirical":
            tol = max(tol, self.sampling_error_bound or tol)
        if abs(arr.sum() - 1.0) > tol:
            raise ValueError(f"frequencies sum to {arr.sum()}, not 1")
        if self.flag not in ("exact", "empirical"):
            raise ValueError("flag must be 'exact' or 'empirical'")
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def k(self) -> int:
        return self.entries.size

    @property
    def sampling_error_bound(self) -> float | None:
        if self.sample_size is None:
            return None
        return 1.0 / np.sqrt(self.sample_size)

    def ranked(self) -> np.ndarray:
        return np.sort(self.entries)[::-1].copy()


class Codec:
    """Maps an external alphabet onto colors 1..k (in symbol order)."""

    def __init__(self, symbols):
        symbols = list(symbols)
        if len(set(symbols)) != len(symbols):
            raise ValueError("codec symbols must be distinct")
        self.symbols = symbols
        self.k = len(symbols)
        self._to_color = {s: i + 1 for i, s in enumerate(symbols)}

    def encode(self, seq) -> Coloring:
        try:
            word = [self._to_color[s] for s in seq]
        except KeyError as exc:
            raise ValueError(f"symbol {exc.args[0]!r} not in codec") from None
        return Coloring(self.k, word)

    def decode(self, x: Coloring) -> str:
        return "".join(self.symbols[c - 1] for c in x.word)


DNA = Codec("ACGT")


def _check_permutation(sigma, n: int) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=np.int64)
    if sigma.shape != (n,) or sorted(sigma.tolist()) != list(range(1, n + 1)):
        raise ValueError(f"sigma must be a permutation of 1..{n}")
    return sigma


def relabel(x: Coloring, sigma) -> Coloring:
    """Relabeled word with entry j equal to x^{sigma(j)}."""
    sigma = _check_permutation(sigma, x.n)
    return Coloring(x.k, x.word[sigma - 1])


def project_to_partition(x: Coloring) -> Partition:
    """Forget colors: i and j share a block iff x^i = x^j."""
    blocks: dict[int, list[int]] = {}
    for j, c in enumerate(x.word.tolist(), start=1):
        blocks.setdefault(c, []).append(j)
    return Partition(x.n, list(blocks.values()), k=x.k)


def symmetric_associate(pi: Partition, rng: np.random.Generator) -> Coloring:
    """Color the blocks uniformly without replacement from 1..k.

    Each of the k(k-1)...(k-#pi+1) colorings projecting to pi is equally
    likely, and the projection of the result is pi with probability one.
    """
    r = pi.block_count
    if r > pi.k:
        raise ValueError(f"partition has {r} blocks but only k={pi.k} colors")
    labels = rng.permutation(pi.k)[:r] + 1
    return Coloring(pi.k, labels[pi.labels() - 1])


def distance(a, b) -> float:
    """Prefix ultrametric 2^{-(longest agreeing prefix)} on colorings or partitions.

    Finite objects approximate the metric on infinite ones: full agreement on
    the available common prefix returns 0 by convention.
    """
    if isinstance(a, Coloring) and isinstance(b, Coloring):
        if a.k != b.k:
            raise ValueError("colorings must share k")
        sa, sb = a.word, b.word
    elif isinstance(a, Partition) and isinstance(b, Partition):
        if a.k != b.k:
            raise ValueError("partitions must share k")
        sa, sb = a.labels(), b.labels()
    else:
        raise TypeError("distance compares two Colorings or two Partitions")
    m = min(sa.size, sb.size)
    neq = np.nonzero(sa[:m] != sb[:m])[0]
    if neq.size == 0:
        return 0.0
    return float(2.0 ** (-int(neq[0])))


def empirical_frequency(x: Coloring) -> FrequencyVector:
    """Per-color coordinate fractions, flagged empirical with the sample size."""
    if x.n == 0:
        raise ValueError("empirical frequency of an empty word is undefined")
    counts = np.bincount(x.word, minlength=x.k + 1)[1:]
    return FrequencyVector(counts / x.n, flag="empirical", sample_size=x.n)


def enumerate_partitions(n: int, k: int) -> list[Partition]:
    """All partitions of [n] with at most k blocks (restricted growth strings)."""
    check_state_space(k, n)
    out: list[Partition] = []

    def grow(rgs: list[int], used: int):
        if len(rgs) == n:
            blocks: dict[int, list[int]] = {}
            for i, lab in enumerate(rgs, start=1):
                blocks.setdefault(lab, []).append(i)
            out.append(Partition(n, list(blocks.values()), k=k))
            return
        for lab in range(1, min(used + 1, k) + 1):
            grow(rgs + [lab], max(used, lab))

    grow([], 0)
    return out


def read_sequence_array(path, codec: Codec) -> list[Coloring]:
    """Ingest a sequence array CSV (one row per individual, one column per site).

    Returns one coloring per site: column m collects the symbols of every
    individual at site m.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError("sequence array is empty")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise ValueError("sequence array rows have unequal site counts")
    return [codec.encode([row[m].strip() for row in rows]) for m in range(width)]
