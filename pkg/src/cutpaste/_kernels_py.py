"""Pure-Python/numpy reference implementations of the hot kernels.

The compiled module mirrors these functions statement-for-statement: both
consume pre-drawn uniforms in the same order and produce identical outputs,
so the backends can be compared exactly.
"""

from __future__ import annotations

import math

import numpy as np


def apply_matrix_rows(word: np.ndarray, cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One synchronized coordinate update.

    word: (n,) colors 1..k; cum: (k, k) row cumulative sums with last column 1;
    u: (n,) uniforms. Coordinate j moves to the first color whose cumulative
    row entry exceeds u[j].
    """
    k = cum.shape[0]
    rows = cum[word - 1]
    nxt = (u[:, None] >= rows).sum(axis=1)
    return np.minimum(nxt, k - 1).astype(np.int64) + 1


def iterate_chain(x0: np.ndarray, cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Iterate T synchronized updates; returns the (T+1, n) word history."""
    T, k = cum.shape[0], cum.shape[1]
    n = x0.shape[0]
    words = np.empty((T + 1, n), dtype=np.int64)
    words[0] = x0
    for m in range(T):
        rows = cum[m][words[m] - 1]
        nxt = (u[m][:, None] >= rows).sum(axis=1)
        words[m + 1] = np.minimum(nxt, k - 1) + 1
    return words


def flip_interval(
    x: np.ndarray,
    pos: np.ndarray,
    idx: np.ndarray,
    counts: np.ndarray,
    crates: np.ndarray,
    t: float,
    t_end: float,
    u_exp: np.ndarray,
    u_cat: np.ndarray,
    u_pos: np.ndarray,
    ev_time: np.ndarray,
    ev_coord: np.ndarray,
    ev_from: np.ndarray,
    ev_to: np.ndarray,
):
    """Evolve single-coordinate flips over [t, t_end] with competing clocks.

    State arrays are mutated in place: x (colors 1..k), pos[i, :counts[i]]
    (0-based coordinates of color i+1), idx (slot of each coordinate in its
    color row), counts. crates[i, i2] is the per-coordinate rate i+1 -> i2+1.

    One (u_exp, u_cat, u_pos) triple is consumed per loop iteration. Returns
    (t_reached, events_written, draws_used); t_reached < t_end means the draw
    buffers ran out and the caller must refill and call again.
    """
    k = crates.shape[0]
    B = u_exp.shape[0]
    c = crates.tolist()
    m = 0
    ne = 0
    while True:
        R = 0.0
        for i in range(k):
            ci = counts[i]
            if ci:
                row = 0.0
                for i2 in range(k):
                    row += c[i][i2]
                R += ci * row
        if R <= 0.0:
            t = t_end
            break
        if m >= B:
            break
        ue = u_exp[m]
        dt = math.inf if ue <= 0.0 else -math.log(ue) / R
        ucat = u_cat[m]
        upos = u_pos[m]
        m += 1
        if t + dt > t_end:
            t = t_end
            break
        t = t + dt
        target = ucat * R
        acc = 0.0
        sel_i = -1
        sel_i2 = -1
        last_i = -1
        last_i2 = -1
        found = False
        for i in range(k):
            ci = counts[i]
            for i2 in range(k):
                r = c[i][i2] * ci
                if r > 0.0:
                    last_i = i
                    last_i2 = i2
                    acc += r
                    if target < acc:
                        sel_i = i
                        sel_i2 = i2
                        found = True
                        break
            if found:
                break
        if not found:
            sel_i = last_i
            sel_i2 = last_i2
        ci = counts[sel_i]
        jj = int(upos * ci)
        if jj >= ci:
            jj = ci - 1
        j = pos[sel_i, jj]
        last = ci - 1
        moved = pos[sel_i, last]
        pos[sel_i, jj] = moved
        idx[moved] = jj
        counts[sel_i] = last
        dest = counts[sel_i2]
        pos[sel_i2, dest] = j
        idx[j] = dest
        counts[sel_i2] = dest + 1
        x[j] = sel_i2 + 1
        ev_time[ne] = t
        ev_coord[ne] = j
        ev_from[ne] = sel_i + 1
        ev_to[ne] = sel_i2 + 1
        ne += 1
    return float(t), ne, m
