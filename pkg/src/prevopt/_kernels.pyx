# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the functions in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil

cnp.import_array()

ctypedef cnp.int64_t i64


def pfcm_sqdist(points_sq, cents_sq):
    cdef const double[:, :, ::1] P = np.ascontiguousarray(points_sq, dtype=np.float64)
    cdef const double[:, :, ::1] C = np.ascontiguousarray(cents_sq, dtype=np.float64)
    cdef Py_ssize_t c = C.shape[0], n = P.shape[0], D = P.shape[1]
    out = np.empty((c, n), dtype=np.float64)
    cdef double[:, ::1] O = out
    cdef Py_ssize_t i, j, d
    cdef double da, dn, acc
    for i in range(c):
        for j in range(n):
            acc = 0.0
            for d in range(D):
                da = P[j, d, 0] - C[i, d, 0]
                dn = P[j, d, 1] - C[i, d, 1]
                acc += da * da + dn * dn + da * dn
            O[i, j] = acc / D
    return out


cdef inline i64 _option(const i64[:, ::1] sol, Py_ssize_t j, const i64[::1] opt_start,
                        const i64[::1] slot_off, const i64[:, ::1] pos_slot) nogil:
    cdef i64 p = sol[j, 0]
    if p == 0:
        return opt_start[j]
    return opt_start[j] + slot_off[pos_slot[j, p]] + sol[j, 1] - 1


cdef void _evaluate(const i64[:, ::1] sol, const i64[::1] opt_start, const i64[::1] slot_off,
                    const i64[:, ::1] pos_slot, const double[:, ::1] contrib,
                    const double[::1] cost, const double[::1] pooled, const double[::1] avail,
                    const i64[::1] row_kind, double[::1] totals, double[::1] res) nogil:
    cdef Py_ssize_t N = sol.shape[0], R = contrib.shape[1]
    cdef Py_ssize_t j, r
    cdef i64 o
    cdef double f = 0.0, t, ex
    for r in range(R):
        totals[r] = 0.0
    for j in range(N):
        o = _option(sol, j, opt_start, slot_off, pos_slot)
        for r in range(R):
            totals[r] += contrib[o, r]
    for j in range(N):
        o = _option(sol, j, opt_start, slot_off, pos_slot)
        f += cost[o]
    res[0] = f
    res[1] = 0.0
    res[2] = 0.0
    res[3] = 0.0
    for r in range(R):
        t = totals[r]
        if pooled[r] > 0:
            t = ceil(t / pooled[r])
        ex = t - avail[r]
        if ex > 0:
            res[1 + row_kind[r]] += ex


def evaluate_options(opts, contrib, cost, pooled, avail, row_kind):
    cdef const i64[::1] O = np.ascontiguousarray(opts, dtype=np.int64)
    cdef const double[:, ::1] Cb = contrib
    cdef const double[::1] Co = cost
    cdef const double[::1] Pl = pooled
    cdef const double[::1] Av = avail
    cdef const i64[::1] Rk = row_kind
    cdef Py_ssize_t N = O.shape[0], R = Cb.shape[1], j, r
    totals = np.zeros(R, dtype=np.float64)
    cdef double[::1] T = totals
    cdef double f = 0.0, t, ex
    cdef double v[3]
    v[0] = 0.0
    v[1] = 0.0
    v[2] = 0.0
    for j in range(N):
        for r in range(R):
            T[r] += Cb[O[j], r]
    for j in range(N):
        f += Co[O[j]]
    for r in range(R):
        t = T[r]
        if Pl[r] > 0:
            t = ceil(t / Pl[r])
        ex = t - Av[r]
        if ex > 0:
            v[Rk[r]] += ex
    return f, v[0], v[1], v[2]


def pairs_to_options(pairs, opt_start, slot_off, pos_slot):
    cdef const i64[:, ::1] S = np.ascontiguousarray(pairs, dtype=np.int64)
    cdef const i64[::1] Os = opt_start
    cdef const i64[::1] So = slot_off
    cdef const i64[:, ::1] Ps = pos_slot
    cdef Py_ssize_t j, n = S.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef i64[::1] Out = out
    for j in range(n):
        Out[j] = _option(S, j, Os, So, Ps)
    return out


cdef inline i64 _pick(double u, i64 n) nogil:
    cdef i64 k = <i64>(u * n)
    if k > n - 1:
        k = n - 1
    return k


cdef void _move(i64[:, ::1] sol, const double[::1] u, const i64[::1] rep_progs,
                const i64[::1] slot_start, const i64[::1] slot_pos, const i64[::1] slot_nb,
                const i64[:, ::1] pos_slot) nogil:
    cdef i64 nrep = rep_progs.shape[0]
    cdef i64 j = rep_progs[_pick(u[1], nrep)]
    cdef i64 ns = slot_start[j + 1] - slot_start[j]
    cdef i64 p = sol[j, 0]
    cdef i64 k, s, nb
    if u[0] < 0.5 and p != 0:
        nb = slot_nb[pos_slot[j, p]]
        sol[j, 1] = _pick(u[3], nb) + 1
        return
    if u[0] < 0.5:
        k = _pick(u[2], ns)
    else:
        k = _pick(u[2], ns + 1)
        if k == ns:
            sol[j, 0] = 0
            sol[j, 1] = 0
            return
    s = slot_start[j] + k
    nb = slot_nb[s]
    sol[j, 0] = slot_pos[s]
    sol[j, 1] = _pick(u[3], nb) + 1


def propagate_batch(pairs, lams, unif, rep_progs, slot_start, slot_pos, slot_nb, slot_off,
                    pos_slot, opt_start, contrib, cost, pooled, avail, row_kind):
    out = np.array(pairs, dtype=np.int64, copy=True, order="C")
    cdef i64[:, :, ::1] S = out
    cdef const i64[::1] L = np.ascontiguousarray(lams, dtype=np.int64)
    cdef const double[:, :, ::1] U = np.ascontiguousarray(unif, dtype=np.float64)
    cdef const i64[::1] Rp = rep_progs
    cdef const i64[::1] Ss = slot_start
    cdef const i64[::1] Sp = slot_pos
    cdef const i64[::1] Sn = slot_nb
    cdef const i64[::1] So = slot_off
    cdef const i64[:, ::1] Ps = pos_slot
    cdef const i64[::1] Os = opt_start
    cdef const double[:, ::1] Cb = contrib
    cdef const double[::1] Co = cost
    cdef const double[::1] Pl = pooled
    cdef const double[::1] Av = avail
    cdef const i64[::1] Rk = row_kind
    cdef Py_ssize_t P = S.shape[0], k, step
    dec = np.empty((P, 4), dtype=np.float64)
    cdef double[:, ::1] Dc = dec
    totals = np.empty(Cb.shape[1], dtype=np.float64)
    cdef double[::1] T = totals
    with nogil:
        for k in range(P):
            for step in range(L[k]):
                _move(S[k], U[k, step], Rp, Ss, Sp, Sn, Ps)
            _evaluate(S[k], Os, So, Ps, Cb, Co, Pl, Av, Rk, T, Dc[k])
    return out, dec


def evaluate_batch(pairs, slot_off, pos_slot, opt_start, contrib, cost, pooled, avail, row_kind):
    arr = np.ascontiguousarray(pairs, dtype=np.int64)
    cdef const i64[:, :, ::1] S = arr
    cdef const i64[::1] So = slot_off
    cdef const i64[:, ::1] Ps = pos_slot
    cdef const i64[::1] Os = opt_start
    cdef const double[:, ::1] Cb = contrib
    cdef const double[::1] Co = cost
    cdef const double[::1] Pl = pooled
    cdef const double[::1] Av = avail
    cdef const i64[::1] Rk = row_kind
    cdef Py_ssize_t P = S.shape[0], k
    dec = np.empty((P, 4), dtype=np.float64)
    cdef double[:, ::1] Dc = dec
    totals = np.empty(Cb.shape[1], dtype=np.float64)
    cdef double[::1] T = totals
    with nogil:
        for k in range(P):
            _evaluate(S[k], Os, So, Ps, Cb, Co, Pl, Av, Rk, T, Dc[k])
    return dec
