"""Continuous-time processes on finite restrictions via a Poisson event loop.

Matrix events (a positive fraction of coordinates may move) fire at
state-independent level-n rates, thinned so that only maps acting
non-trivially on [n] count; single-coordinate flips run between them on
competing exponential clocks aggregated by color class. The induced simplex
process follows the deterministic flip flow d phi/dt = phi G between matrix
events and jumps by the right action phi -> phi S at them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import kernels
from .coloring import Coloring
from .cosets import CosetMap, StochasticMatrix
from .measures import (
    CharacteristicPair,
    FlipRates,
    sample_coset_map,
    sample_coset_map_not_identity,
)
from .util import check_state_space, enumerate_words, format_float

__all__ = [
    "FlipEvent",
    "MatrixEvent",
    "GridSample",
    "RateTable",
    "ContinuousTrace",
    "level_rates",
    "simulate",
    "flip_generator",
    "frequency_flow",
    "transition_rate_matrix",
]

_FLIP_BATCH_CAP = 4096


@dataclass(frozen=True)
class FlipEvent:
    time: float
    coordinate: int  # 1-based
    from_color: int
    to_color: int
    state_after: np.ndarray | None = None

    kind = "flip"
    changed = True


@dataclass(frozen=True)
class MatrixEvent:
    time: float
    matrix: StochasticMatrix
    map: CosetMap | None
    changed: bool
    state_after: np.ndarray | None = None

    kind = "matrix"


@dataclass(frozen=True)
class GridSample:
    time: float
    word: np.ndarray
    frequency: np.ndarray


class RateTable:
    """Level-n event rates for a pair at a given state.

    type1[r] is the thinned rate of matrix channel r (for an atom S with
    weight w this is exactly w(1 - prod_i S_ii^n), the probability-weighted
    chance that a sampled map acts non-trivially on [n]); flip rates are
    aggregated by color class, rate(i -> i') = c[i, i'] * #{j : x^j = i}.
    """

    def __init__(self, pair: CharacteristicPair, n: int, counts: np.ndarray,
                 discarded_rate_bound: float = 0.0):
        self.pair = pair
        self.n = n
        channel_set = pair.level_channels(n)
        self.channels = channel_set.channels
        self.type1 = np.array([ch.rate for ch in self.channels], dtype=np.float64)
        self.discarded_rate_bound = max(discarded_rate_bound,
                                        channel_set.discarded_rate_bound)
        self.counts = np.asarray(counts, dtype=np.int64)

    @property
    def type1_total(self) -> float:
        return float(self.type1.sum())

    @property
    def type2_by_color(self) -> np.ndarray:
        """k x k matrix of aggregated flip rates c[i, i'] * count_i."""
        return self.pair.flips.c * self.counts[:, None]

    @property
    def type2_total(self) -> float:
        return float(self.type2_by_color.sum())

    @property
    def total(self) -> float:
        return self.type1_total + self.type2_total


def level_rates(pair: CharacteristicPair, n: int, x: Coloring) -> RateTable:
    """The rate table the event loop uses at level n from state x."""
    if x.k != pair.k:
        raise ValueError("pair and state must share k")
    if x.n != n:
        raise ValueError(f"state has length {x.n}, expected level n={n}")
    counts = np.bincount(x.word, minlength=pair.k + 1)[1:]
    return RateTable(pair, n, counts)


class _FlipState:
    """Positions-by-color bookkeeping backing O(1) flip event application."""

    def __init__(self, word: np.ndarray, k: int):
        self.k = k
        self.x = word
        n = word.size
        self.pos = np.zeros((k, n), dtype=np.int64)
        self.idx = np.zeros(n, dtype=np.int64)
        self.counts = np.zeros(k, dtype=np.int64)
        self.rebuild()

    def rebuild(self) -> None:
        for i in range(self.k):
            where = np.flatnonzero(self.x == i + 1)
            self.counts[i] = where.size
            self.pos[i, : where.size] = where
            self.idx[where] = np.arange(where.size)

    def total_rate(self, row_sums: np.ndarray) -> float:
        return float((self.counts * row_sums).sum())


@dataclass
class ContinuousTrace:
    """Event record of one level-n path.

    matrix_events always keeps the lightweight (time, S) list; the full event
    log (with maps and state-after snapshots) is populated only when
    record_events is on, since flip-heavy runs at large n would otherwise
    dominate memory.
    """

    k: int
    n: int
    horizon: float
    initial: np.ndarray
    final: np.ndarray
    final_time: float
    matrix_events: list[tuple[float, StochasticMatrix]]
    flip_event_count: int
    events: list | None
    samples: list[GridSample] = field(default_factory=list)

    @property
    def matrix_event_count(self) -> int:
        return len(self.matrix_events)

    @property
    def event_count(self) -> int:
        return self.flip_event_count + self.matrix_event_count

    def first_visible_change(self):
        """(time, state_after) of the first event that moved the state, or None."""
        if self.events is None:
            raise ValueError("first_visible_change needs record_events=True")
        for ev in self.events:
            if ev.changed:
                return ev.time, ev.state_after
        return None

    @staticmethod
    def _hash(word: np.ndarray) -> str:
        return hashlib.sha256(np.ascontiguousarray(word).tobytes()).hexdigest()[:16]

    def write_event_csv(self, fh) -> None:
        fh.write("time,kind,detail,state_hash\n")
        if self.events is None:
            for t, S in self.matrix_events:
                fh.write(f"{format_float(t)},matrix,atom,\n")
            return
        for ev in self.events:
            if ev.kind == "flip":
                detail = f"coord {ev.coordinate}: {ev.from_color}->{ev.to_color}"
            else:
                detail = "matrix" + ("" if ev.changed else " (state fixed)")
            h = "" if ev.state_after is None else self._hash(ev.state_after)
            fh.write(f"{format_float(ev.time)},{ev.kind},{detail},{h}\n")

    def write_grid_csv(self, fh) -> None:
        k = self.k
        fh.write("time," + ",".join(f"freq_{i}" for i in range(1, k + 1)) + "\n")
        for s in self.samples:
            row = [format_float(s.time)] + [format_float(v) for v in s.frequency]
            fh.write(",".join(row) + "\n")

    def summary(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "horizon": self.horizon,
            "final_time": self.final_time,
            "matrix_events": self.matrix_event_count,
            "flip_events": self.flip_event_count,
        }


def _frequency(word: np.ndarray, k: int) -> np.ndarray:
    return np.bincount(word, minlength=k + 1)[1:] / word.size


def _evolve_flips(fs: _FlipState, crates: np.ndarray, row_sums: np.ndarray,
                  t: float, t_end: float, rng: np.random.Generator,
                  events: list | None, max_events: int | None):
    """Run the flip clock over (t, t_end]; returns (t_reached, n_events, hit_max)."""
    total = 0
    if max_events is not None and max_events <= 0:
        return t, 0, True
    while t < t_end:
        rate = fs.total_rate(row_sums)
        if rate <= 0.0:
            return t_end, total, False
        expected = rate * (t_end - t)
        batch = int(min(_FLIP_BATCH_CAP, max(8, 2 * expected + 4)))
        if max_events is not None:
            batch = max(1, min(batch, max_events - total))
        u_exp = rng.random(batch)
        u_cat = rng.random(batch)
        u_pos = rng.random(batch)
        ev_time = np.empty(batch)
        ev_coord = np.empty(batch, dtype=np.int64)
        ev_from = np.empty(batch, dtype=np.int64)
        ev_to = np.empty(batch, dtype=np.int64)
        before = fs.x.copy() if events is not None else None
        t, ne, _ = kernels.flip_interval(
            fs.x, fs.pos, fs.idx, fs.counts, crates, t, t_end,
            u_exp, u_cat, u_pos, ev_time, ev_coord, ev_from, ev_to,
        )
        if events is not None and ne:
            w = before
            for e in range(ne):
                w[ev_coord[e]] = ev_to[e]
                events.append(
                    FlipEvent(
                        time=float(ev_time[e]),
                        coordinate=int(ev_coord[e]) + 1,
                        from_color=int(ev_from[e]),
                        to_color=int(ev_to[e]),
                        state_after=w.copy(),
                    )
                )
        total += ne
        if max_events is not None and total >= max_events:
            return t, total, True
    return t, total, False


def simulate(pair: CharacteristicPair, x0: Coloring, horizon: float,
             rng: np.random.Generator, *, grid=None, record_events: bool = True,
             stop_after_changes: int | None = None) -> ContinuousTrace:
    """Simulate the level-n restriction of the pair's process over [0, horizon].

    Competing exponential clocks: matrix channels fire at state-independent
    thinned rates and sample their map conditioned on acting non-trivially on
    [n] (atom channels) or by candidate thinning (Dirichlet channels, where a
    sampled map that restricts to the identity is silently skipped); flips run
    between matrix events with per-color aggregated clocks resampled after
    every event. Matrix events that leave the current state fixed are still
    recorded, flagged unchanged.

    grid requests (time, state, frequency) snapshots; stop_after_changes ends
    the run after that many visible state changes (first-jump estimation).
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if x0.k != pair.k:
        raise ValueError("pair and initial state must share k")
    k, n = pair.k, x0.n
    channel_set = pair.level_channels(n)
    channels = channel_set.channels
    type1 = np.array([ch.rate for ch in channels], dtype=np.float64)
    total1 = float(type1.sum())
    cum1 = np.cumsum(type1) if channels else np.empty(0)
    crates = np.ascontiguousarray(pair.flips.c)
    row_sums = crates.sum(axis=1)
    word = x0.word.astype(np.int64)
    fs = _FlipState(word, k)

    grid_times = sorted(float(g) for g in (grid or ()))
    if grid_times and (grid_times[0] < 0 or grid_times[-1] > horizon):
        raise ValueError("grid times must lie in [0, horizon]")
    samples: list[GridSample] = []
    events: list | None = [] if record_events else None
    matrix_events: list[tuple[float, StochasticMatrix]] = []
    flip_count = 0
    changes = 0
    t = 0.0
    gi = 0
    while gi < len(grid_times) and grid_times[gi] <= 0.0:
        samples.append(GridSample(grid_times[gi], word.copy(), _frequency(word, k)))
        gi += 1

    stopped = False
    while not stopped:
        tau = t + rng.exponential(1.0 / total1) if total1 > 0 else np.inf
        t_seg = min(tau, horizon)
        while gi < len(grid_times) and grid_times[gi] <= t_seg:
            g = grid_times[gi]
            remaining = None if stop_after_changes is None else stop_after_changes - changes
            t, ne, hit = _evolve_flips(fs, crates, row_sums, t, g, rng, events, remaining)
            flip_count += ne
            changes += ne
            if hit:
                stopped = True
                break
            samples.append(GridSample(g, word.copy(), _frequency(word, k)))
            gi += 1
        if stopped:
            break
        remaining = None if stop_after_changes is None else stop_after_changes - changes
        t, ne, hit = _evolve_flips(fs, crates, row_sums, t, t_seg, rng, events, remaining)
        flip_count += ne
        changes += ne
        if hit:
            break
        if tau > horizon:
            break
        # matrix event at tau
        r = rng.random() * total1
        ci = min(int(np.searchsorted(cum1, r, side="right")), len(channels) - 1)
        ch = channels[ci]
        if ch.kind == "atom":
            S = ch.matrix
            M = sample_coset_map_not_identity(S, n, rng)
        else:
            S = ch.measure.sample_matrix(rng)
            M = sample_coset_map(S, n, rng)
            if M.is_identity():
                continue  # candidate thinned away: not a level-n event
        new_word = M.cosets[word - 1, np.arange(n)]
        changed = not np.array_equal(new_word, word)
        word[:] = new_word
        fs.rebuild()
        matrix_events.append((tau, S))
        if events is not None:
            events.append(
                MatrixEvent(time=tau, matrix=S, map=M, changed=changed,
                            state_after=word.copy())
            )
        if changed:
            changes += 1
            if stop_after_changes is not None and changes >= stop_after_changes:
                break

    return ContinuousTrace(
        k=k, n=n, horizon=horizon, initial=x0.word.copy(), final=word.copy(),
        final_time=min(t, horizon), matrix_events=matrix_events,
        flip_event_count=flip_count, events=events, samples=samples,
    )


def flip_generator(flips: FlipRates) -> np.ndarray:
    """Generator of the single-coordinate flip flow: offdiag c, rows sum to 0."""
    G = flips.c.copy()
    np.fill_diagonal(G, 0.0)
    np.fill_diagonal(G, -G.sum(axis=1))
    return G


def _make_propagator(G: np.ndarray, tol: float = 1e-12):
    """phi, dt -> phi exp(G dt), by eigendecomposition when it is trustworthy."""
    k = G.shape[0]
    scale = max(1.0, float(np.abs(G).max()))
    try:
        w, V = np.linalg.eig(G)
        Vinv = np.linalg.inv(V)
        recon = (V * w) @ Vinv
        ok = np.abs(recon - G).max() <= tol * scale
    except np.linalg.LinAlgError:
        ok = False
    if ok:
        def prop(phi: np.ndarray, dt: float) -> np.ndarray:
            if dt == 0.0:
                return phi
            return np.real(phi @ ((V * np.exp(w * dt)) @ Vinv))
    else:
        def prop(phi: np.ndarray, dt: float) -> np.ndarray:
            if dt == 0.0:
                return phi
            return phi @ expm(G * dt)
    return prop


def frequency_flow(pair: CharacteristicPair, phi0, times, matrix_events=()):
    """Deterministic simplex trajectory: flip flow between matrix events,
    right action phi -> phi S at each event.

    matrix_events is a time-sorted iterable of (time, S) pairs (as recorded by
    simulate); returns the (len(times), k) array of frequencies at the
    requested times, with events at time t applied before sampling at t.
    """
    phi = np.asarray(getattr(phi0, "entries", phi0), dtype=np.float64).copy()
    if phi.ndim != 1 or phi.size != pair.k:
        raise ValueError("phi0 must be a length-k frequency vector")
    times = [float(t) for t in times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be nondecreasing")
    evs = [(float(t), np.asarray(getattr(S, "a", S), dtype=np.float64))
           for t, S in matrix_events]
    prop = _make_propagator(flip_generator(pair.flips))
    out = np.empty((len(times), pair.k))
    t_cur = 0.0
    ei = 0
    for row, t_target in enumerate(times):
        if t_target < t_cur:
            raise ValueError("times must start at or after 0")
        while ei < len(evs) and evs[ei][0] <= t_target:
            te, Sa = evs[ei]
            phi = prop(phi, te - t_cur) @ Sa
            t_cur = te
            ei += 1
        phi = prop(phi, t_target - t_cur)
        t_cur = t_target
        out[row] = phi
    return out


def transition_rate_matrix(n: int, pair: CharacteristicPair) -> np.ndarray:
    """Exact level-n generator: product-form matrix rates plus flip rates.

    Off-diagonal entry (x, x') is sum_r w_r prod_j S_r(x^j, x'^j) plus
    c_{ii'} when x' is the single flip of x at one coordinate; rows sum to 0.
    Needs an atomic measure (or no measure at all).
    """
    k = pair.k
    size = check_state_space(k, n, dense=True)
    words = enumerate_words(k, n)
    Q = np.zeros((size, size))
    if pair.sigma is not None:
        atoms = getattr(pair.sigma, "atoms", None)
        if atoms is None:
            raise ValueError("the exact generator needs an atomic measure")
        for S, w in atoms:
            prod = np.ones((size, size))
            for j in range(n):
                col = words[:, j] - 1
                prod *= S.a[np.ix_(col, col)]
            Q += w * prod
    c = pair.flips.c
    for a in range(size):
        for j in range(n):
            i = words[a, j] - 1
            for i2 in range(k):
                if i2 == i:
                    continue
                target = words[a].copy()
                target[j] = i2 + 1
                b = int(np.ravel_multi_index(target - 1, (k,) * n))
                Q[a, b] += c[i, i2]
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q
