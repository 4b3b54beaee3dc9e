"""Homogeneous processes on partitions with at most k blocks.

A partition process is simulated by coloring the initial partition's blocks
uniformly without replacement (its symmetric associate), running the coloring
process, and projecting every state back; homogeneity of the pair (row-column
exchangeable measure, constant off-diagonal flip rate) makes the projection
Markov, and colors are never re-randomized mid-path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import continuous, discrete
from .coloring import Coloring, Partition, project_to_partition, symmetric_associate
from .cosets import CosetMap
from .measures import CharacteristicPair, FlipRates, MatrixMeasure
from .util import falling, format_float

__all__ = [
    "HomogeneityError",
    "HomogeneousPair",
    "check_homogeneous",
    "cp_operator",
    "symmetric_rate",
    "PartitionTrace",
    "simulate_partition",
    "run_partition_chain",
    "ranked_frequency",
    "ranked_frequency_track",
]


class HomogeneityError(ValueError):
    """The measure or flip table does not treat the colors symmetrically."""


def check_homogeneous(sigma: MatrixMeasure | None, tol: float = 1e-9) -> None:
    """Raise HomogeneityError naming the first violated permutation pair."""
    if sigma is None:
        return
    report = sigma.is_row_column_exchangeable(tol=tol)
    if not report.ok:
        raise HomogeneityError(
            "measure is not row-column exchangeable: " + report.detail
        )


@dataclass(frozen=True)
class HomogeneousPair:
    """Row-column exchangeable measure plus one flip constant c >= 0."""

    sigma: MatrixMeasure | None
    c: float = 0.0
    k: int | None = None

    def __post_init__(self):
        if self.sigma is None and self.k is None:
            raise ValueError("k is required when there is no matrix measure")
        if self.c < 0:
            raise ValueError("flip constant must be nonnegative")
        check_homogeneous(self.sigma)
        k = self.sigma.k if self.sigma is not None else self.k
        object.__setattr__(self, "k", k)

    @property
    def pair(self) -> CharacteristicPair:
        return CharacteristicPair(self.sigma, FlipRates.constant(self.k, self.c))


def cp_operator(M: CosetMap, pi: Partition, rng: np.random.Generator) -> Partition:
    """Apply a coset map to a partition: color blocks, map, forget colors."""
    if M.k != pi.k:
        raise ValueError("map and partition must share k")
    x = symmetric_associate(pi, rng)
    return project_to_partition(M.apply(x))


def symmetric_rate(pi: Partition, pi2: Partition, partition_rates, k: int) -> float:
    """Coloring-level rate between symmetric representatives of pi and pi2.

    Divides the partition jump rate by k(k-1)...(k-#pi2+1); multiplying back
    by that falling factorial recovers the partition rate. The diagonal is
    not a jump rate and is rejected.
    """
    if pi == pi2:
        raise ValueError("symmetric rate is undefined on the diagonal")
    if pi.block_count > k or pi2.block_count > k:
        raise ValueError(f"partitions must have at most k={k} blocks")
    rate = partition_rates(pi, pi2) if callable(partition_rates) else partition_rates[(pi, pi2)]
    return float(rate) / falling(k, pi2.block_count)


@dataclass
class PartitionTrace:
    """Projected partition path: jump times plus grid snapshots."""

    k: int
    n: int
    initial: Partition
    jumps: list[tuple[float, Partition]]
    samples: list[tuple[float, Partition]]
    coloring_trace: continuous.ContinuousTrace = field(repr=False)

    def state_at_end(self) -> Partition:
        return self.jumps[-1][1] if self.jumps else self.initial

    def write_csv(self, fh) -> None:
        fh.write("time,partition\n")
        fh.write(f"{format_float(0.0)},{self.initial.to_string()}\n")
        for t, pi in self.jumps:
            fh.write(f"{format_float(t)},{pi.to_string()}\n")


def simulate_partition(hpair: HomogeneousPair, pi0: Partition, horizon: float,
                       rng: np.random.Generator, *, grid=None,
                       record_events: bool = True) -> PartitionTrace:
    """Continuous-time partition path from the symmetric associate of pi0."""
    if pi0.k != hpair.k:
        raise ValueError("pair and initial partition must share k")
    x0 = symmetric_associate(pi0, rng)
    trace = continuous.simulate(hpair.pair, x0, horizon, rng,
                                grid=grid, record_events=True)
    jumps: list[tuple[float, Partition]] = []
    current = pi0
    for ev in trace.events:
        if not ev.changed:
            continue
        pi = project_to_partition(Coloring(hpair.k, ev.state_after))
        if pi != current:
            jumps.append((ev.time, pi))
            current = pi
    samples = [
        (s.time, project_to_partition(Coloring(hpair.k, s.word)))
        for s in trace.samples
    ]
    if not record_events:
        trace.events = None
    return PartitionTrace(k=hpair.k, n=pi0.n, initial=pi0, jumps=jumps,
                          samples=samples, coloring_trace=trace)


def run_partition_chain(sigma: MatrixMeasure, pi0: Partition, steps: int,
                        rng: np.random.Generator):
    """Discrete-time partition chain: associate once, run, project every state.

    Returns (partitions, coloring trace); sigma must be row-column
    exchangeable for the projection to be Markov.
    """
    check_homogeneous(sigma)
    if pi0.k != sigma.k:
        raise ValueError("measure and initial partition must share k")
    x0 = symmetric_associate(pi0, rng)
    trace = discrete.run_chain(x0, sigma, steps, rng)
    partitions = [
        project_to_partition(Coloring(sigma.k, w)) for w in trace.words
    ]
    return partitions, trace


def ranked_frequency(state, k: int | None = None) -> np.ndarray:
    """Decreasing block/color fractions, zero-padded to length k."""
    if isinstance(state, Partition):
        k = state.k if k is None else k
        sizes = sorted((len(b) for b in state.blocks), reverse=True)
        out = np.zeros(k)
        out[: len(sizes)] = np.array(sizes) / state.n
        return out
    if isinstance(state, Coloring):
        k = state.k if k is None else k
        counts = np.bincount(state.word, minlength=state.k + 1)[1:]
        out = np.sort(counts / state.n)[::-1]
        if k > state.k:
            out = np.concatenate([out, np.zeros(k - state.k)])
        return out
    raise TypeError("ranked frequency takes a Partition or a Coloring")


def ranked_frequency_track(states, k: int | None = None) -> np.ndarray:
    """Ranked frequency of every state in a trace or state sequence."""
    if isinstance(states, discrete.DiscreteTrace):
        states = states.states
    rows = [ranked_frequency(s, k) for s in states]
    return np.stack(rows) if rows else np.empty((0, k or 0))
