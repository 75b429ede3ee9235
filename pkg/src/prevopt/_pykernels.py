"""Reference (numpy / pure Python) versions of the hot kernels.

Each function here has a twin with the same signature in ``_kernels.pyx``.
Loop orders match so that both backends produce identical results.
"""

import math

import numpy as np


def pfcm_sqdist(points_sq, cents_sq):
    """Squared vector distances, shape ``(c, n)``, in squared-degree space."""
    points_sq = np.asarray(points_sq, dtype=np.float64)
    cents_sq = np.asarray(cents_sq, dtype=np.float64)
    c = cents_sq.shape[0]
    n, D = points_sq.shape[0], points_sq.shape[1]
    out = np.empty((c, n), dtype=np.float64)
    pa = points_sq[:, :, 0]
    pn = points_sq[:, :, 1]
    for i in range(c):
        da = pa - cents_sq[i, :, 0]
        dn = pn - cents_sq[i, :, 1]
        out[i] = np.sum(da * da + dn * dn + da * dn, axis=1) / D
    return out


def evaluate_options(opts, contrib, cost, pooled, avail, row_kind):
    """Return ``(f, v_drug, v_shared, v_nonshared)`` for one option vector."""
    totals = np.add.reduce(contrib[opts], axis=0)
    f = 0.0
    for o in opts:
        f += cost[o]
    v = [0.0, 0.0, 0.0]
    for r in range(totals.shape[0]):
        t = totals[r]
        if pooled[r] > 0:
            t = math.ceil(t / pooled[r])
        ex = t - avail[r]
        if ex > 0:
            v[row_kind[r]] += ex
    return f, v[0], v[1], v[2]


def pairs_to_options(pairs, opt_start, slot_off, pos_slot):
    n = pairs.shape[0]
    opts = np.empty(n, dtype=np.int64)
    for j in range(n):
        p = pairs[j, 0]
        if p == 0:
            opts[j] = opt_start[j]
        else:
            opts[j] = opt_start[j] + slot_off[pos_slot[j, p]] + pairs[j, 1] - 1
    return opts


def _move(sol, u, rep_progs, slot_start, slot_pos, slot_nb, pos_slot):
    nrep = rep_progs.shape[0]
    j = rep_progs[min(int(u[1] * nrep), nrep - 1)]
    ns = slot_start[j + 1] - slot_start[j]
    p = sol[j, 0]
    if u[0] < 0.5 and p != 0:
        nb = slot_nb[pos_slot[j, p]]
        sol[j, 1] = min(int(u[3] * nb), nb - 1) + 1
        return
    if u[0] < 0.5:
        k = min(int(u[2] * ns), ns - 1)
    else:
        k = min(int(u[2] * (ns + 1)), ns)
        if k == ns:
            sol[j, 0] = 0
            sol[j, 1] = 0
            return
    s = slot_start[j] + k
    nb = slot_nb[s]
    sol[j, 0] = slot_pos[s]
    sol[j, 1] = min(int(u[3] * nb), nb - 1) + 1


def propagate_batch(pairs, lams, unif, rep_progs, slot_start, slot_pos, slot_nb, slot_off,
                    pos_slot, opt_start, contrib, cost, pooled, avail, row_kind):
    """Apply ``lams[k]`` neighbor moves to each ``pairs[k]`` and evaluate.

    ``pairs`` has shape ``(P, N, 2)``; ``unif`` holds four uniforms per move,
    shape ``(P, max(lams), 4)``.  Returns the moved copies and their
    ``(P, 4)`` fitness decompositions.
    """
    out = np.array(pairs, dtype=np.int64, copy=True)
    dec = np.empty((out.shape[0], 4), dtype=np.float64)
    for k in range(out.shape[0]):
        sol = out[k]
        for step in range(lams[k]):
            _move(sol, unif[k, step], rep_progs, slot_start, slot_pos, slot_nb, pos_slot)
        opts = pairs_to_options(sol, opt_start, slot_off, pos_slot)
        dec[k] = evaluate_options(opts, contrib, cost, pooled, avail, row_kind)
    return out, dec


def evaluate_batch(pairs, slot_off, pos_slot, opt_start, contrib, cost, pooled, avail, row_kind):
    pairs = np.asarray(pairs, dtype=np.int64)
    dec = np.empty((pairs.shape[0], 4), dtype=np.float64)
    for k in range(pairs.shape[0]):
        opts = pairs_to_options(pairs[k], opt_start, slot_off, pos_slot)
        dec[k] = evaluate_options(opts, contrib, cost, pooled, avail, row_kind)
    return dec
