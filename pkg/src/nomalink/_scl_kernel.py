"""Successive-cancellation list decoding inner loop.

The decoder walks the code tree for all list paths in lockstep.  Per path it
keeps the classic compact state: one live LLR segment per tree depth
(2N-1 values), the left-child partial sums needed by future g-steps (N-1
bits), and the decision vector.  Path forks copy that state into free slots,
selection ties break on candidate index so runs are bit-exact reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def scl_run(chan_llr, frozen_mask, frozen_val, list_size):
    """Run list decoding; returns (decisions, path_metrics, n_paths).

    chan_llr: channel LLRs, length N (power of two), ln(P0/P1) convention.
    frozen_mask: uint8[N], 1 where the position is frozen.
    frozen_val: uint8[N], forced value at frozen positions (0 elsewhere).
    """
    N = chan_llr.shape[0]
    n = 0
    while (1 << n) < N:
        n += 1
    L = list_size

    # depth-d LLR segment lives at llr[:, off[d] : off[d] + (N >> d)]
    off = np.empty(n + 1, np.int64)
    o = 0
    for d in range(n + 1):
        off[d] = o
        o += N >> d
    # depth-d left-child partial sums at bl[:, offb[d] : offb[d] + (N >> d)]
    offb = np.zeros(n + 1, np.int64)
    ob = 0
    for d in range(1, n + 1):
        offb[d] = ob
        ob += N >> d

    llr = np.zeros((L, 2 * N - 1), np.float64)
    bl = np.zeros((L, N - 1), np.uint8)
    u = np.zeros((L, N), np.uint8)
    pm = np.zeros(L, np.float64)
    llr[0, 0:N] = chan_llr
    nact = 1

    scratch = np.empty(N, np.uint8)
    scratch2 = np.empty(N, np.uint8)
    cand_metric = np.empty(2 * L, np.float64)
    order = np.empty(2 * L, np.int64)
    keep0 = np.empty(L, np.uint8)
    keep1 = np.empty(L, np.uint8)
    freeslots = np.empty(L, np.int64)
    clonejob = np.empty(L, np.int64)
    leaf = off[n]

    for i in range(N):
        # refresh LLR segments: one g-step at the shallowest stale depth,
        # then f-steps down to the leaf
        if i == 0:
            d0 = 1
            do_g = False
        else:
            tz = 0
            ii = i
            while ii & 1 == 0:
                tz += 1
                ii >>= 1
            d0 = n - tz
            do_g = True
        for p in range(nact):
            dstart = d0
            if do_g:
                m = N >> d0
                src = off[d0 - 1]
                dst = off[d0]
                bo = offb[d0]
                for j in range(m):
                    a = llr[p, src + j]
                    b = llr[p, src + j + m]
                    if bl[p, bo + j]:
                        llr[p, dst + j] = b - a
                    else:
                        llr[p, dst + j] = b + a
                dstart = d0 + 1
            for d in range(dstart, n + 1):
                m = N >> d
                src = off[d - 1]
                dst = off[d]
                for j in range(m):
                    a = llr[p, src + j]
                    b = llr[p, src + j + m]
                    aa = a if a >= 0.0 else -a
                    ab = b if b >= 0.0 else -b
                    mn = aa if aa < ab else ab
                    if (a < 0.0) != (b < 0.0):
                        mn = -mn
                    llr[p, dst + j] = mn

        if frozen_mask[i]:
            v = frozen_val[i]
            for p in range(nact):
                lam = llr[p, leaf]
                hard = np.uint8(1) if lam < 0.0 else np.uint8(0)
                if hard != v:
                    pm[p] += lam if lam >= 0.0 else -lam
                u[p, i] = v
        else:
            ncand = 2 * nact
            for p in range(nact):
                lam = llr[p, leaf]
                pen = lam if lam >= 0.0 else -lam
                if lam < 0.0:
                    cand_metric[2 * p] = pm[p] + pen
                    cand_metric[2 * p + 1] = pm[p]
                else:
                    cand_metric[2 * p] = pm[p]
                    cand_metric[2 * p + 1] = pm[p] + pen
            if ncand <= L:
                # room for everything: clone each path for the bit-1 branch
                for p in range(nact):
                    q = nact + p
                    llr[q, :] = llr[p, :]
                    bl[q, :] = bl[p, :]
                    u[q, :] = u[p, :]
                    u[q, i] = 1
                    pm[q] = cand_metric[2 * p + 1]
                    u[p, i] = 0
                    pm[p] = cand_metric[2 * p]
                nact = ncand
            else:
                # keep the L best candidates; ties go to the lower candidate
                # index (= lower parent slot, bit 0 first) for determinism
                for c in range(ncand):
                    order[c] = c
                for a_ in range(1, ncand):
                    key = order[a_]
                    km = cand_metric[key]
                    b_ = a_ - 1
                    while b_ >= 0 and (
                        cand_metric[order[b_]] > km
                        or (cand_metric[order[b_]] == km and order[b_] > key)
                    ):
                        order[b_ + 1] = order[b_]
                        b_ -= 1
                    order[b_ + 1] = key
                for p in range(nact):
                    keep0[p] = 0
                    keep1[p] = 0
                for s in range(L):
                    c = order[s]
                    if c & 1:
                        keep1[c >> 1] = 1
                    else:
                        keep0[c >> 1] = 1
                nfree = 0
                njobs = 0
                for p in range(nact):
                    if keep0[p] and keep1[p]:
                        clonejob[njobs] = p
                        njobs += 1
                    elif keep0[p]:
                        u[p, i] = 0
                        pm[p] = cand_metric[2 * p]
                    elif keep1[p]:
                        u[p, i] = 1
                        pm[p] = cand_metric[2 * p + 1]
                    else:
                        freeslots[nfree] = p
                        nfree += 1
                for jj in range(njobs):
                    p = clonejob[jj]
                    q = freeslots[jj]
                    llr[q, :] = llr[p, :]
                    bl[q, :] = bl[p, :]
                    u[q, :] = u[p, :]
                    u[q, i] = 1
                    pm[q] = cand_metric[2 * p + 1]
                    u[p, i] = 0
                    pm[p] = cand_metric[2 * p]

        # propagate partial sums: merge completed right children upward,
        # then store the result as a left-child segment
        for p in range(nact):
            scratch[0] = u[p, i]
            clen = 1
            d = n
            j = i
            while d > 0 and (j & 1) == 1:
                m = N >> d
                bo = offb[d]
                for t in range(m):
                    scratch2[t] = bl[p, bo + t] ^ scratch[t]
                    scratch2[m + t] = scratch[t]
                for t in range(2 * m):
                    scratch[t] = scratch2[t]
                clen = 2 * m
                d -= 1
                j >>= 1
            if d > 0:
                bo = offb[d]
                for t in range(clen):
                    bl[p, bo + t] = scratch[t]

    return u, pm, nact
