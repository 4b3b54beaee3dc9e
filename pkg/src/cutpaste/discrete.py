"""Discrete-time cut-and-paste chains and their frequency track.

Each step samples a stochastic matrix S from the directing measure and moves
every coordinate independently according to the row of its current color.
The induced simplex chain is the exact matrix product track
phi_m = phi_0 S_1 ... S_m. Closed forms for the Dirichlet-product family
(transition probability, stationary laws on colorings and partitions,
reversibility) are provided in float and exact rational modes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .coloring import (
    Coloring,
    FrequencyVector,
    Partition,
    empirical_frequency,
    enumerate_partitions,
)
from .cosets import StochasticMatrix, as_stochastic
from .measures import FiniteAtomicMeasure, MatrixMeasure
from .util import (
    as_fraction,
    check_state_space,
    enumerate_words,
    format_float,
    rising_fraction,
    rising_log,
)

__all__ = [
    "DiscreteTrace",
    "apply_stochastic",
    "step",
    "run_chain",
    "exact_transition_matrix",
    "dirichlet_transition",
    "dirichlet_kernel_matrix",
    "dirichlet_stationary_colorings",
    "dirichlet_stationary_partitions",
    "initial_word",
    "initial_uniform",
    "initial_paintbox",
]

EXACT_MODE_MAX_N = 8


def _cum_rows(mats: np.ndarray) -> np.ndarray:
    cum = np.cumsum(mats, axis=-1)
    cum[..., -1] = 1.0
    return np.ascontiguousarray(cum)


def apply_stochastic(x: Coloring, S, rng: np.random.Generator) -> Coloring:
    """Move every coordinate independently per the row of its current color."""
    S = as_stochastic(S)
    if S.k != x.k:
        raise ValueError("matrix and coloring must share k")
    u = rng.random(x.n)
    return Coloring(x.k, kernels.apply_matrix_rows(x.word, S.cum, u))


def step(x: Coloring, sigma: MatrixMeasure, rng: np.random.Generator):
    """One chain step: sample S from the normalized measure, update, return both."""
    S = sigma.sample_matrix(rng)
    return apply_stochastic(x, S, rng), S


@dataclass
class DiscreteTrace:
    """States X_0..X_T, the matrices actually sampled, and both frequency tracks.

    exact_freqs is the matrix-product track phi_m = phi_0 S_1...S_m;
    empirical_freqs are the per-state color fractions.
    """

    k: int
    words: np.ndarray  # (T+1, n)
    matrices: np.ndarray  # (T, k, k)
    exact_freqs: np.ndarray  # (T+1, k)
    empirical_freqs: np.ndarray  # (T+1, k)

    @property
    def steps(self) -> int:
        return self.words.shape[0] - 1

    @property
    def n(self) -> int:
        return self.words.shape[1]

    @property
    def states(self) -> list[Coloring]:
        return [Coloring(self.k, w) for w in self.words]

    @property
    def sampled_matrices(self) -> list[StochasticMatrix]:
        return [StochasticMatrix(m) for m in self.matrices]

    def frequency_vectors(self, which: str = "exact") -> list[FrequencyVector]:
        if which == "exact":
            return [FrequencyVector(f, flag="exact") for f in self.exact_freqs]
        return [
            FrequencyVector(f, flag="empirical", sample_size=self.n)
            for f in self.empirical_freqs
        ]

    def max_track_deviation(self) -> float:
        """Max over steps of the sup-norm gap between the two tracks."""
        return float(np.abs(self.exact_freqs - self.empirical_freqs).max())

    def state_label(self, m: int) -> str:
        word = self.words[m]
        if word.size <= 64:
            return "".join(str(int(c)) for c in word)
        return hashlib.sha256(word.tobytes()).hexdigest()[:16]

    def write_csv(self, fh) -> None:
        k = self.k
        header = (
            ["step", "state"]
            + [f"phi_{i}" for i in range(1, k + 1)]
            + [f"emp_{i}" for i in range(1, k + 1)]
        )
        fh.write(",".join(header) + "\n")
        for m in range(self.words.shape[0]):
            row = [str(m), self.state_label(m)]
            row += [format_float(v) for v in self.exact_freqs[m]]
            row += [format_float(v) for v in self.empirical_freqs[m]]
            fh.write(",".join(row) + "\n")

    def summary(self) -> dict:
        return {
            "steps": self.steps,
            "n": self.n,
            "k": self.k,
            "max_track_deviation": self.max_track_deviation(),
        }


def run_chain(x0: Coloring, sigma: MatrixMeasure, steps: int,
              rng: np.random.Generator) -> DiscreteTrace:
    """Iterate the chain for the given number of steps from x0."""
    if steps < 0:
        raise ValueError("step count must be nonnegative")
    k, n = x0.k, x0.n
    mats = np.asarray(sigma.sample_matrix_batch(steps, rng), dtype=np.float64)
    if mats.shape != (steps, k, k):
        raise ValueError("measure produced a batch of the wrong shape")
    u = rng.random((steps, n))
    words = kernels.iterate_chain(x0.word, _cum_rows(mats), u)
    exact = np.empty((steps + 1, k))
    exact[0] = empirical_frequency(x0).entries
    for m in range(steps):
        exact[m + 1] = exact[m] @ mats[m]
    emp = np.empty((steps + 1, k))
    for i in range(k):
        emp[:, i] = (words == i + 1).sum(axis=1) / n
    return DiscreteTrace(k=k, words=words, matrices=mats,
                         exact_freqs=exact, empirical_freqs=emp)


def exact_transition_matrix(n: int, sigma: FiniteAtomicMeasure) -> np.ndarray:
    """Dense transition matrix over {1..k}^n for a finite atomic measure.

    Entry (x, x') integrates the per-coordinate row products against the
    normalized atom weights; state order is lexicographic in the word.
    """
    if not isinstance(sigma, FiniteAtomicMeasure):
        raise TypeError("the exact kernel needs a finite atomic measure")
    k = sigma.k
    size = check_state_space(k, n, dense=True)
    words = enumerate_words(k, n)
    weights = np.array([w for _, w in sigma.atoms])
    weights = weights / weights.sum()
    P = np.zeros((size, size))
    for (S, _), w in zip(sigma.atoms, weights):
        prod = np.ones((size, size))
        for j in range(n):
            col = words[:, j] - 1
            prod *= S.a[np.ix_(col, col)]
        P += w * prod
    return P


def _pair_counts(x: Coloring, x2: Coloring) -> np.ndarray:
    if x.k != x2.k or x.n != x2.n:
        raise ValueError("colorings must share k and length")
    k = x.k
    joint = (x.word - 1) * k + (x2.word - 1)
    return np.bincount(joint, minlength=k * k).reshape(k, k)


def dirichlet_transition(x: Coloring, x2: Coloring, alpha, exact: bool = False):
    """Transition probability of the Dirichlet-product chain in closed form.

    Computes prod_i [prod_{i'} (alpha/k)^{rising n_{ii'}}] / alpha^{rising n_i}
    with the rising factorial a^{rising m} = a(a+1)...(a+m-1). Float mode works
    in log space; exact mode returns a Fraction for rational alpha.
    """
    counts = _pair_counts(x, x2)
    row_counts = counts.sum(axis=1)
    k = x.k
    if exact:
        a = as_fraction(alpha)
        if a <= 0:
            raise ValueError("alpha must be positive")
        out = Fraction(1)
        for i in range(k):
            for i2 in range(k):
                out *= rising_fraction(a / k, int(counts[i, i2]))
            out /= rising_fraction(a, int(row_counts[i]))
        return out
    alpha = float(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    log_p = 0.0
    for i in range(k):
        for i2 in range(k):
            log_p += rising_log(alpha / k, int(counts[i, i2]))
        log_p -= rising_log(alpha, int(row_counts[i]))
    return float(np.exp(log_p))


def dirichlet_kernel_matrix(n: int, k: int, alpha: float) -> np.ndarray:
    """Dense closed-form kernel over {1..k}^n for the Dirichlet-product chain."""
    size = check_state_space(k, n, dense=True)
    words = enumerate_words(k, n)
    P = np.empty((size, size))
    cache: dict[tuple, float] = {}
    for a in range(size):
        xa = Coloring(k, words[a])
        for b in range(size):
            counts = _pair_counts(xa, Coloring(k, words[b]))
            key = tuple(counts.ravel().tolist())
            if key not in cache:
                row_counts = counts.sum(axis=1)
                log_p = 0.0
                for i in range(k):
                    for i2 in range(k):
                        log_p += rising_log(alpha / k, int(counts[i, i2]))
                    log_p -= rising_log(alpha, int(row_counts[i]))
                cache[key] = float(np.exp(log_p))
            P[a, b] = cache[key]
    return P


def dirichlet_stationary_colorings(n: int, k: int, alpha, exact: bool = False):
    """Stationary law on colorings: prod_i alpha^{rising n_i(x)} / (k alpha)^{rising n}."""
    if exact:
        check_state_space(k, n)
        if n > EXACT_MODE_MAX_N:
            raise ValueError(f"exact mode supports n <= {EXACT_MODE_MAX_N}")
        a = as_fraction(alpha)
        words = enumerate_words(k, n)
        denom = rising_fraction(k * a, n)
        out = []
        for w in words:
            counts = np.bincount(w, minlength=k + 1)[1:]
            num = Fraction(1)
            for c in counts:
                num *= rising_fraction(a, int(c))
            out.append(num / denom)
        return out
    size = check_state_space(k, n)
    words = enumerate_words(k, n)
    alpha = float(alpha)
    log_denom = rising_log(k * alpha, n)
    vals = np.empty(size)
    for idx, w in enumerate(words):
        counts = np.bincount(w, minlength=k + 1)[1:]
        vals[idx] = np.exp(
            sum(rising_log(alpha, int(c)) for c in counts) - log_denom
        )
    return vals


def dirichlet_stationary_partitions(n: int, k: int, alpha, exact: bool = False):
    """Stationary law on partitions with <= k blocks.

    rho(pi) = k!/(k - #pi)! * prod_{b in pi} alpha^{rising #b} / (k alpha)^{rising n},
    the pushforward of the coloring stationary law under color removal.
    """
    parts = enumerate_partitions(n, k)
    if exact:
        if n > EXACT_MODE_MAX_N:
            raise ValueError(f"exact mode supports n <= {EXACT_MODE_MAX_N}")
        a = as_fraction(alpha)
        denom = rising_fraction(k * a, n)
        out: dict[Partition, Fraction] = {}
        for pi in parts:
            num = Fraction(1)
            for b in pi.blocks:
                num *= rising_fraction(a, len(b))
            labelings = 1
            for j in range(pi.block_count):
                labelings *= k - j
            out[pi] = labelings * num / denom
        return out
    alpha = float(alpha)
    log_denom = rising_log(k * alpha, n)
    result: dict[Partition, float] = {}
    for pi in parts:
        log_num = sum(rising_log(alpha, len(b)) for b in pi.blocks)
        labelings = 1.0
        for j in range(pi.block_count):
            labelings *= k - j
        result[pi] = float(labelings * np.exp(log_num - log_denom))
    return result


def initial_word(k: int, word) -> Coloring:
    """Deterministic initial state from explicit colors."""
    return Coloring(k, word)


def initial_uniform(n: int, k: int, rng: np.random.Generator) -> Coloring:
    """Coordinates i.i.d. uniform over the colors."""
    return Coloring(k, rng.integers(1, k + 1, size=n))


def initial_paintbox(n: int, freqs, rng: np.random.Generator) -> Coloring:
    """Coordinates i.i.d. from a given simplex point (paintbox coloring)."""
    freqs = np.asarray(freqs, dtype=np.float64)
    if freqs.ndim != 1 or freqs.min() < 0 or abs(freqs.sum() - 1.0) > 1e-9:
        raise ValueError("freqs must be a probability vector")
    cum = np.cumsum(freqs)
    cum[-1] = 1.0
    word = np.searchsorted(cum, rng.random(n), side="right") + 1
    return Coloring(freqs.size, np.minimum(word, freqs.size))
