# Compiled mirrors of _kernels_py; keep the draw-consumption order identical.

from libc.math cimport INFINITY, log
from libc.stdint cimport int64_t

import numpy as np


def apply_matrix_rows(word, cum, u):
    cdef const int64_t[::1] w = word
    cdef const double[:, ::1] c = cum
    cdef const double[::1] uu = u
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t k = c.shape[0]
    out_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t j, i2
    cdef int64_t row
    cdef double x
    for j in range(n):
        row = w[j] - 1
        x = uu[j]
        i2 = 0
        while i2 < k - 1 and x >= c[row, i2]:
            i2 += 1
        out[j] = i2 + 1
    return out_arr


def iterate_chain(x0, cum, u):
    cdef const int64_t[::1] start = x0
    cdef const double[:, :, ::1] c = cum
    cdef const double[:, ::1] uu = u
    cdef Py_ssize_t T = c.shape[0]
    cdef Py_ssize_t k = c.shape[1]
    cdef Py_ssize_t n = start.shape[0]
    words_arr = np.empty((T + 1, n), dtype=np.int64)
    cdef int64_t[:, ::1] words = words_arr
    cdef Py_ssize_t m, j, i2
    cdef int64_t row
    cdef double x
    for j in range(n):
        words[0, j] = start[j]
    for m in range(T):
        for j in range(n):
            row = words[m, j] - 1
            x = uu[m, j]
            i2 = 0
            while i2 < k - 1 and x >= c[m, row, i2]:
                i2 += 1
            words[m + 1, j] = i2 + 1
    return words_arr


def flip_interval(x, pos, idx, counts, crates, double t, double t_end,
                  u_exp, u_cat, u_pos, ev_time, ev_coord, ev_from, ev_to):
    cdef int64_t[::1] xv = x
    cdef int64_t[:, ::1] posv = pos
    cdef int64_t[::1] idxv = idx
    cdef int64_t[::1] cnt = counts
    cdef const double[:, ::1] c = crates
    cdef const double[::1] uev = u_exp
    cdef const double[::1] ucv = u_cat
    cdef const double[::1] upv = u_pos
    cdef double[::1] evt = ev_time
    cdef int64_t[::1] evc = ev_coord
    cdef int64_t[::1] evf = ev_from
    cdef int64_t[::1] evto = ev_to
    cdef Py_ssize_t k = c.shape[0]
    cdef Py_ssize_t B = uev.shape[0]
    cdef Py_ssize_t m = 0
    cdef Py_ssize_t ne = 0
    cdef Py_ssize_t i, i2, sel_i, sel_i2, last_i, last_i2, jj, last, dest
    cdef int64_t ci, j, moved
    cdef double R, row, ue, dt, ucat, upos, target, acc, r
    cdef bint found
    while True:
        R = 0.0
        for i in range(k):
            ci = cnt[i]
            if ci:
                row = 0.0
                for i2 in range(k):
                    row += c[i, i2]
                R += ci * row
        if R <= 0.0:
            t = t_end
            break
        if m >= B:
            break
        ue = uev[m]
        dt = INFINITY if ue <= 0.0 else -log(ue) / R
        ucat = ucv[m]
        upos = upv[m]
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
            ci = cnt[i]
            for i2 in range(k):
                r = c[i, i2] * ci
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
        ci = cnt[sel_i]
        jj = <Py_ssize_t>(upos * ci)
        if jj >= ci:
            jj = ci - 1
        j = posv[sel_i, jj]
        last = ci - 1
        moved = posv[sel_i, last]
        posv[sel_i, jj] = moved
        idxv[moved] = jj
        cnt[sel_i] = last
        dest = cnt[sel_i2]
        posv[sel_i2, dest] = j
        idxv[j] = dest
        cnt[sel_i2] = dest + 1
        xv[j] = sel_i2 + 1
        evt[ne] = t
        evc[ne] = j
        evf[ne] = sel_i + 1
        evto[ne] = sel_i2 + 1
        ne += 1
    return float(t), ne, m
