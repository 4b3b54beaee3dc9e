"""Brute-force exact verification on small state spaces.

Builds dense transition kernels and generators, checks exchangeability and
consistency under subsampling, detailed balance and stationarity, compares
simulators against exact laws with z-score reports, and measures total
variation mixing profiles. The Ehrenfest walk ships as the negative control:
exchangeable but not consistent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from . import continuous, discrete
from .coloring import Coloring, Partition, enumerate_partitions, project_to_partition
from .measures import CharacteristicPair, FiniteAtomicMeasure, MatrixMeasure
from .util import check_state_space, encode_words, enumerate_words

__all__ = [
    "ExactKernel",
    "CheckReport",
    "discrete_kernel",
    "dirichlet_kernel",
    "generator_kernel",
    "ehrenfest_kernel",
    "check_exchangeable",
    "check_consistent",
    "check_detailed_balance",
    "check_stationary",
    "compare_monte_carlo",
    "first_jump_comparison",
    "mixing_profile",
    "project_kernel_to_partitions",
    "measure_step_simulator",
]


@dataclass
class ExactKernel:
    """Dense kernel over {1..k}^n: transition probabilities or jump rates.

    States are ordered lexicographically in the word; discrete rows sum to 1
    within 1e-12, generator rows sum to 0 with nonnegative off-diagonals.
    """

    k: int
    n: int
    kind: str  # "transition" | "generator"
    matrix: np.ndarray
    _words: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        size = check_state_space(self.k, self.n, dense=True)
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.shape != (size, size):
            raise ValueError(f"kernel must be {size}x{size}")
        sums = self.matrix.sum(axis=1)
        if self.kind == "transition":
            if self.matrix.min() < 0 or np.abs(sums - 1.0).max() > 1e-12:
                raise ValueError("transition rows must be nonnegative and sum to 1")
        elif self.kind == "generator":
            off = self.matrix[~np.eye(size, dtype=bool)]
            if off.min() < -1e-15 or np.abs(sums).max() > 1e-12:
                raise ValueError("generator rows must sum to 0 with offdiag >= 0")
        else:
            raise ValueError("kind must be 'transition' or 'generator'")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def words(self) -> np.ndarray:
        if self._words is None:
            self._words = enumerate_words(self.k, self.n)
        return self._words

    def index(self, state) -> int:
        word = state.word if isinstance(state, Coloring) else np.asarray(state)
        return int(encode_words(word, self.k))

    def state(self, i: int) -> Coloring:
        return Coloring(self.k, self.words[i])

    def label(self, i: int) -> str:
        return "".join(str(int(c)) for c in self.words[i])


@dataclass
class CheckReport:
    """One verification outcome, JSON-serializable with witness on failure."""

    name: str
    passed: bool
    max_deviation: float
    witness: dict | None = None
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "passed": self.passed,
            "max_deviation": self.max_deviation,
            "witness": self.witness,
            "info": self.info,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def discrete_kernel(n: int, sigma: FiniteAtomicMeasure) -> ExactKernel:
    return ExactKernel(k=sigma.k, n=n, kind="transition",
                       matrix=discrete.exact_transition_matrix(n, sigma))


def dirichlet_kernel(n: int, k: int, alpha: float) -> ExactKernel:
    return ExactKernel(k=k, n=n, kind="transition",
                       matrix=discrete.dirichlet_kernel_matrix(n, k, alpha))


def generator_kernel(n: int, pair: CharacteristicPair) -> ExactKernel:
    return ExactKernel(k=pair.k, n=n, kind="generator",
                       matrix=continuous.transition_rate_matrix(n, pair))


def ehrenfest_kernel(n: int) -> ExactKernel:
    """Ehrenfest walk on {1,2}^n: uniform coordinate, fair coin for its value.

    Stays put with probability 1/2 and moves to each of the n neighbors with
    probability 1/(2n); exchangeable but not consistent under subsampling.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    size = check_state_space(2, n, dense=True)
    P = np.zeros((size, size))
    np.fill_diagonal(P, 0.5)
    for a in range(size):
        for j in range(n):
            P[a, a ^ (1 << (n - 1 - j))] += 1.0 / (2 * n)
    return ExactKernel(k=2, n=n, kind="transition", matrix=P)


def _state_permutation(kernel: ExactKernel, sigma: np.ndarray) -> np.ndarray:
    """Index permutation induced by relabeling words with sigma (1-based)."""
    return encode_words(kernel.words[:, sigma - 1], kernel.k)


def check_exchangeable(kernel: ExactKernel, full: bool = False,
                       tol: float = 1e-12) -> CheckReport:
    """Invariance of the kernel under coordinate permutations.

    Adjacent transpositions generate the symmetric group and suffice; full
    mode scans every permutation (paranoia at small n).
    """
    n = kernel.n
    if full:
        sigmas = [np.array(p, dtype=np.int64) for p in permutations(range(1, n + 1))]
    else:
        sigmas = []
        for j in range(n - 1):
            s = np.arange(1, n + 1, dtype=np.int64)
            s[j], s[j + 1] = s[j + 1], s[j]
            sigmas.append(s)
    worst = 0.0
    witness = None
    for s in sigmas:
        perm = _state_permutation(kernel, s)
        permuted = kernel.matrix[np.ix_(perm, perm)]
        dev = np.abs(kernel.matrix - permuted)
        m = float(dev.max())
        if m > worst:
            worst = m
            a, b = np.unravel_index(int(dev.argmax()), dev.shape)
            witness = {
                "sigma": s.tolist(),
                "x": kernel.label(a),
                "x2": kernel.label(b),
                "value": float(kernel.matrix[a, b]),
                "permuted_value": float(permuted[a, b]),
            }
    passed = worst <= tol
    return CheckReport(
        name="exchangeable",
        passed=passed,
        max_deviation=worst,
        witness=None if passed else witness,
        info={"n": n, "k": kernel.k, "permutations": len(sigmas), "full": full},
    )


def check_consistent(kernel_n: ExactKernel, kernel_m: ExactKernel,
                     tol: float = 1e-12) -> CheckReport:
    """Subsampling consistency of a kernel pair at levels n >= m.

    For every level-m state x, every extension x* to level n and every
    level-m target x', the marginal of row x* over extensions of x' must
    equal the level-m entry (x, x') - the same value for all extensions x*.
    Generators are compared off-diagonal only.
    """
    if kernel_n.k != kernel_m.k or kernel_n.kind != kernel_m.kind:
        raise ValueError("kernels must share k and kind")
    n, m = kernel_n.n, kernel_m.n
    if m > n:
        raise ValueError("the first kernel must be the finer one (n >= m)")
    ext = kernel_n.k ** (n - m)
    size_m = kernel_m.size
    # big-endian word encoding: extensions of a level-m state are contiguous
    marg = kernel_n.matrix.reshape(kernel_n.size, size_m, ext).sum(axis=2)
    worst = 0.0
    witness = None
    for c in range(size_m):
        rows = marg[c * ext:(c + 1) * ext]
        dev = np.abs(rows - kernel_m.matrix[c])
        if kernel_n.kind == "generator":
            dev[:, c] = 0.0  # diagonal is not a jump rate
        d = float(dev.max())
        if d > worst:
            worst = d
            a, b = np.unravel_index(int(dev.argmax()), dev.shape)
            witness = {
                "x": kernel_m.label(c),
                "extension": kernel_n.label(c * ext + a),
                "x2": kernel_m.label(b),
                "marginal": float(rows[a, b]),
                "coarse_value": float(kernel_m.matrix[c, b]),
            }
    passed = worst <= tol
    return CheckReport(
        name="consistent",
        passed=passed,
        max_deviation=worst,
        witness=None if passed else witness,
        info={"n": n, "m": m, "k": kernel_n.k, "kind": kernel_n.kind},
    )


def check_detailed_balance(kernel: ExactKernel, stationary, tol: float = 1e-10) -> CheckReport:
    """Max |lambda(x) P(x,x') - lambda(x') P(x',x)| over all pairs."""
    lam = np.asarray(stationary, dtype=np.float64)
    flux = lam[:, None] * kernel.matrix
    dev = np.abs(flux - flux.T)
    worst = float(dev.max())
    passed = worst <= tol
    witness = None
    if not passed:
        a, b = np.unravel_index(int(dev.argmax()), dev.shape)
        witness = {"x": kernel.label(a), "x2": kernel.label(b),
                   "forward": float(flux[a, b]), "backward": float(flux[b, a])}
    return CheckReport(name="detailed_balance", passed=passed,
                       max_deviation=worst, witness=witness)


def check_stationary(kernel: ExactKernel, stationary, tol: float = 1e-10) -> CheckReport:
    """lambda P = lambda (transition) or lambda Q = 0 (generator)."""
    lam = np.asarray(stationary, dtype=np.float64)
    out = lam @ kernel.matrix
    target = lam if kernel.kind == "transition" else np.zeros_like(lam)
    worst = float(np.abs(out - target).max())
    return CheckReport(name="stationary", passed=worst <= tol, max_deviation=worst)


def measure_step_simulator(sigma: MatrixMeasure):
    """Single-step batch simulator matching discrete_kernel's law."""

    def sim(word: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
        k = sigma.k
        mats = np.asarray(sigma.sample_matrix_batch(size, rng))
        cum = np.cumsum(mats, axis=2)
        cum[:, :, -1] = 1.0
        rows = cum[np.arange(size)[:, None], word[None, :] - 1]  # (size, n, k)
        u = rng.random((size, word.size))
        nxt = np.minimum((u[:, :, None] >= rows).sum(axis=2), k - 1) + 1
        return encode_words(nxt, k)

    return sim


@dataclass
class MonteCarloReport:
    """Per-entry z-score comparison of a simulator against an exact kernel."""

    passed: bool
    max_abs_z: float
    tol_sigma: float
    n_entries: int
    samples_per_state: int
    failures: list = field(default_factory=list)
    insufficient: list = field(default_factory=list)
    zero_violations: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": "monte_carlo",
            "passed": self.passed,
            "max_abs_z": self.max_abs_z,
            "tol_sigma": self.tol_sigma,
            "n_entries": self.n_entries,
            "samples_per_state": self.samples_per_state,
            "failures": self.failures,
            "insufficient": self.insufficient,
            "zero_violations": self.zero_violations,
            "info": self.info,
        }


def compare_monte_carlo(kernel: ExactKernel, simulator, n_samples: int,
                        tol_sigma: float, rng: np.random.Generator,
                        min_expected: float = 10.0) -> MonteCarloReport:
    """Compare empirical single-step frequencies to a transition kernel.

    n_samples is split evenly across start states. Entries with exact
    probability 0 or 1 must be matched exactly; entries with too little
    expected mass for the normal approximation are reported as insufficient
    rather than silently passed. The per-entry threshold is tol_sigma; the
    report carries the Bonferroni family-wise bound across entries.
    """
    if kernel.kind != "transition":
        raise ValueError("monte carlo comparison needs a transition kernel")
    per_state = n_samples // kernel.size
    if per_state < 1:
        raise ValueError("n_samples must cover every start state")
    max_z = 0.0
    failures = []
    insufficient = []
    zero_violations = []
    for a in range(kernel.size):
        codes = simulator(kernel.words[a], per_state, rng)
        counts = np.bincount(codes, minlength=kernel.size)
        p = kernel.matrix[a]
        for b in range(kernel.size):
            if p[b] == 0.0 or p[b] == 1.0:
                expected = per_state * p[b]
                if counts[b] != expected:
                    zero_violations.append(
                        {"x": kernel.label(a), "x2": kernel.label(b),
                         "count": int(counts[b]), "expected": float(expected)}
                    )
                continue
            if per_state * min(p[b], 1 - p[b]) < min_expected:
                insufficient.append({"x": kernel.label(a), "x2": kernel.label(b),
                                     "p": float(p[b])})
            z = (counts[b] - per_state * p[b]) / math.sqrt(per_state * p[b] * (1 - p[b]))
            max_z = max(max_z, abs(z))
            if abs(z) > tol_sigma:
                failures.append({"x": kernel.label(a), "x2": kernel.label(b),
                                 "z": float(z), "p": float(p[b]),
                                 "count": int(counts[b])})
    n_entries = kernel.size * kernel.size
    bonferroni = n_entries * math.erfc(tol_sigma / math.sqrt(2.0))
    passed = not failures and not zero_violations and not insufficient
    return MonteCarloReport(
        passed=passed, max_abs_z=max_z, tol_sigma=tol_sigma,
        n_entries=n_entries, samples_per_state=per_state,
        failures=failures, insufficient=insufficient,
        zero_violations=zero_violations,
        info={"bonferroni_family_bound": bonferroni},
    )


def first_jump_comparison(kernel: ExactKernel, pair: CharacteristicPair,
                          start: Coloring, n_runs: int, tol_sigma: float,
                          rng: np.random.Generator,
                          horizon: float | None = None) -> MonteCarloReport:
    """Estimate generator rates by counting first visible jumps in short runs.

    The default horizon is h = 0.01/total-rate. The first visible jump lands
    in x' within h with exact probability (Q(x,x')/R)(1 - e^{-Rh}), so the
    per-target z-test is unbiased; the naive rate estimate count/(runs*h)
    carries a relative bias of order h*rate, reported alongside.
    """
    if kernel.kind != "generator":
        raise ValueError("first-jump comparison needs a generator kernel")
    a = kernel.index(start)
    R = -kernel.matrix[a, a]
    if R <= 0:
        # zero-rate start: any observed transition is a violation
        counts = _first_jump_counts(pair, start, horizon or 1.0, n_runs, rng)
        bad = {kernel.label(b): int(c) for b, c in counts.items()}
        return MonteCarloReport(
            passed=not bad, max_abs_z=0.0, tol_sigma=tol_sigma,
            n_entries=kernel.size, samples_per_state=n_runs,
            zero_violations=[bad] if bad else [],
            info={"total_rate": 0.0},
        )
    h = 0.01 / R if horizon is None else horizon
    jump_prob = 1.0 - math.exp(-R * h)
    counts = _first_jump_counts(pair, start, h, n_runs, rng)
    max_z = 0.0
    failures = []
    zero_violations = []
    estimates = {}
    for b in range(kernel.size):
        if b == a:
            continue
        q = kernel.matrix[a, b] / R * jump_prob
        c = counts.get(b, 0)
        if q == 0.0:
            if c:
                zero_violations.append({"x2": kernel.label(b), "count": int(c)})
            continue
        z = (c - n_runs * q) / math.sqrt(n_runs * q * (1 - q))
        max_z = max(max_z, abs(z))
        estimates[kernel.label(b)] = {
            "rate_estimate": c * R / (n_runs * jump_prob),
            "naive_rate": c / (n_runs * h),
            "exact_rate": float(kernel.matrix[a, b]),
            "z": float(z),
        }
        if abs(z) > tol_sigma:
            failures.append({"x2": kernel.label(b), "z": float(z)})
    passed = not failures and not zero_violations
    return MonteCarloReport(
        passed=passed, max_abs_z=max_z, tol_sigma=tol_sigma,
        n_entries=kernel.size - 1, samples_per_state=n_runs,
        failures=failures, zero_violations=zero_violations,
        info={
            "horizon": h,
            "total_rate": float(R),
            "relative_bias_bound": R * h / 2.0,
            "estimates": estimates,
        },
    )


def _first_jump_counts(pair: CharacteristicPair, start: Coloring, h: float,
                       n_runs: int, rng: np.random.Generator) -> dict[int, int]:
    counts: dict[int, int] = {}
    for _ in range(n_runs):
        trace = continuous.simulate(pair, start, h, rng,
                                    record_events=True, stop_after_changes=1)
        first = trace.first_visible_change()
        if first is not None:
            code = int(encode_words(first[1], pair.k))
            counts[code] = counts.get(code, 0) + 1
    return counts


def mixing_profile(kernel: ExactKernel, start, stationary,
                   max_steps: int = 200, threshold: float | None = None) -> np.ndarray:
    """Total variation distance d_TV(P^m(start, .), stationary) for m = 0, 1, ...

    Stops after max_steps, or earlier once the distance falls below the
    threshold (when given). Uses repeated exact vector-matrix products.
    """
    if kernel.kind != "transition":
        raise ValueError("mixing profile needs a transition kernel")
    lam = np.asarray(stationary, dtype=np.float64)
    dist = np.zeros(kernel.size)
    dist[kernel.index(start) if not isinstance(start, (int, np.integer)) else int(start)] = 1.0
    out = []
    for _ in range(max_steps + 1):
        out.append(0.5 * float(np.abs(dist - lam).sum()))
        if threshold is not None and out[-1] < threshold:
            break
        dist = dist @ kernel.matrix
    return np.array(out)


def project_kernel_to_partitions(kernel: ExactKernel):
    """Pushforward of a coloring kernel to partitions with <= k blocks.

    Returns (partitions, matrix, max_representative_deviation): rows are
    computed from every coloring representative and must agree for
    homogeneous kernels; the deviation reports the worst disagreement.
    """
    parts = enumerate_partitions(kernel.n, kernel.k)
    part_index = {pi: i for i, pi in enumerate(parts)}
    state_part = np.array([
        part_index[project_to_partition(kernel.state(i))] for i in range(kernel.size)
    ])
    mat = np.zeros((len(parts), len(parts)))
    max_dev = 0.0
    for pi, pidx in part_index.items():
        reps = np.flatnonzero(state_part == pidx)
        rows = np.zeros((reps.size, len(parts)))
        for r, a in enumerate(reps):
            for b in range(kernel.size):
                rows[r, state_part[b]] += kernel.matrix[a, b]
        mat[pidx] = rows[0]
        if reps.size > 1:
            max_dev = max(max_dev, float(np.abs(rows - rows[0]).max()))
    return parts, mat, max_dev
