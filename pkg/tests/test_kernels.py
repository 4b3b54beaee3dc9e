"""Differential tests: the compiled backend must match the pure-Python one
exactly (both consume pre-drawn uniforms in the same order)."""

import numpy as np
import pytest

from cutpaste.kernels import available_backends

BACKENDS = available_backends()
needs_cython = pytest.mark.skipif(
    "cython" not in BACKENDS, reason="compiled extension not built"
)


def _cum(mats):
    c = np.cumsum(mats, axis=-1)
    c[..., -1] = 1.0
    return np.ascontiguousarray(c)


def _random_flip_state(rng, k, n):
    x = rng.integers(1, k + 1, size=n).astype(np.int64)
    pos = np.zeros((k, n), dtype=np.int64)
    idx = np.zeros(n, dtype=np.int64)
    counts = np.zeros(k, dtype=np.int64)
    for i in range(k):
        where = np.flatnonzero(x == i + 1)
        counts[i] = where.size
        pos[i, : where.size] = where
        idx[where] = np.arange(where.size)
    return x, pos, idx, counts


@needs_cython
class TestBackendEquality:
    def test_apply_matrix_rows(self, rng):
        for k in (2, 3, 4):
            word = rng.integers(1, k + 1, size=257).astype(np.int64)
            cum = _cum(rng.dirichlet(np.ones(k), size=k))
            u = rng.random(257)
            outs = [BACKENDS[b].apply_matrix_rows(word, cum, u) for b in ("python", "cython")]
            assert np.array_equal(outs[0], outs[1])

    def test_apply_boundary_uniforms(self):
        # u exactly on a cumulative boundary must break ties identically
        cum = np.array([[0.25, 0.5, 1.0], [0.0, 0.5, 1.0], [0.5, 0.5, 1.0]])
        word = np.array([1, 2, 3, 1, 2, 3], dtype=np.int64)
        u = np.array([0.25, 0.5, 0.0, 0.999999, 0.5, 0.5])
        outs = [BACKENDS[b].apply_matrix_rows(word, cum, u) for b in ("python", "cython")]
        assert np.array_equal(outs[0], outs[1])

    def test_iterate_chain(self, rng):
        k, n, T = 3, 11, 53
        x0 = rng.integers(1, k + 1, size=n).astype(np.int64)
        cum = _cum(rng.dirichlet(np.ones(k), size=(T, k)))
        u = rng.random((T, n))
        outs = [BACKENDS[b].iterate_chain(x0, cum, u) for b in ("python", "cython")]
        assert np.array_equal(outs[0], outs[1])

    def test_flip_interval_paths_identical(self, rng):
        k, n = 3, 40
        crates = np.ascontiguousarray(rng.random((k, k)) * 2)
        np.fill_diagonal(crates, 0.0)
        seeds = rng.integers(0, 2**32, size=3)
        for seed in seeds:
            states = {}
            for name in ("python", "cython"):
                r = np.random.default_rng(int(seed))
                x, pos, idx, counts = _random_flip_state(np.random.default_rng(7), k, n)
                t = 0.0
                events = []
                while t < 2.0:
                    B = 17
                    u1, u2, u3 = r.random(B), r.random(B), r.random(B)
                    ev_t = np.empty(B)
                    ev_c = np.empty(B, dtype=np.int64)
                    ev_f = np.empty(B, dtype=np.int64)
                    ev_to = np.empty(B, dtype=np.int64)
                    t, ne, used = BACKENDS[name].flip_interval(
                        x, pos, idx, counts, crates, t, 2.0,
                        u1, u2, u3, ev_t, ev_c, ev_f, ev_to,
                    )
                    events.append((ev_t[:ne].copy(), ev_c[:ne].copy(),
                                   ev_f[:ne].copy(), ev_to[:ne].copy(), used))
                states[name] = (x.copy(), pos.copy(), idx.copy(), counts.copy(), t, events)
            xa, pa, ia, ca, ta, ea = states["python"]
            xb, pb, ib, cb, tb, eb = states["cython"]
            assert np.array_equal(xa, xb)
            assert np.array_equal(ca, cb)
            assert np.array_equal(pa, pb)
            assert np.array_equal(ia, ib)
            assert ta == tb
            assert len(ea) == len(eb)
            for (t1, c1, f1, to1, u1), (t2, c2, f2, to2, u2) in zip(ea, eb):
                assert np.array_equal(t1, t2)
                assert np.array_equal(c1, c2)
                assert np.array_equal(f1, f2)
                assert np.array_equal(to1, to2)
                assert u1 == u2


class TestFlipSemantics:
    @pytest.mark.parametrize("name", sorted(BACKENDS))
    def test_zero_rate_jumps_to_end(self, name, rng):
        k, n = 2, 5
        x, pos, idx, counts = _random_flip_state(rng, k, n)
        crates = np.zeros((k, k))
        B = 4
        bufs = [rng.random(B) for _ in range(3)]
        ev = [np.empty(B), np.empty(B, np.int64), np.empty(B, np.int64), np.empty(B, np.int64)]
        t, ne, used = BACKENDS[name].flip_interval(
            x, pos, idx, counts, crates, 0.0, 3.0, *bufs, *ev
        )
        assert (t, ne, used) == (3.0, 0, 0)

    @pytest.mark.parametrize("name", sorted(BACKENDS))
    def test_bookkeeping_stays_consistent(self, name, rng):
        k, n = 3, 30
        x, pos, idx, counts = _random_flip_state(rng, k, n)
        crates = np.ascontiguousarray(rng.random((k, k)))
        np.fill_diagonal(crates, 0.0)
        t = 0.0
        while t < 5.0:
            B = 64
            bufs = [rng.random(B) for _ in range(3)]
            ev = [np.empty(B), np.empty(B, np.int64), np.empty(B, np.int64),
                  np.empty(B, np.int64)]
            t, ne, used = BACKENDS[name].flip_interval(
                x, pos, idx, counts, crates, t, 5.0, *bufs, *ev
            )
            # counts match the word, pos/idx stay mutually inverse
            assert counts.sum() == n
            for i in range(k):
                members = set(pos[i, : counts[i]].tolist())
                assert members == set(np.flatnonzero(x == i + 1).tolist())
                for slot, j in enumerate(pos[i, : counts[i]].tolist()):
                    assert idx[j] == slot

    @pytest.mark.parametrize("name", sorted(BACKENDS))
    def test_absorbing_color_stops_flips(self, name):
        # only 1 -> 2 flips: once everything is color 2 the rate hits zero
        k, n = 2, 6
        x = np.ones(n, dtype=np.int64)
        pos = np.zeros((k, n), dtype=np.int64)
        pos[0] = np.arange(n)
        idx = np.arange(n, dtype=np.int64)
        counts = np.array([n, 0], dtype=np.int64)
        crates = np.array([[0.0, 5.0], [0.0, 0.0]])
        rng = np.random.default_rng(3)
        t, total = 0.0, 0
        while t < 50.0:
            B = 8
            bufs = [rng.random(B) for _ in range(3)]
            ev = [np.empty(B), np.empty(B, np.int64), np.empty(B, np.int64),
                  np.empty(B, np.int64)]
            t, ne, used = BACKENDS[name].flip_interval(
                x, pos, idx, counts, crates, t, 50.0, *bufs, *ev
            )
            total += ne
        assert total == n
        assert (x == 2).all()
