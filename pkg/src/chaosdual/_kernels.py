"""Compiled per-path loops for the dual objective.

The kernel releases the GIL so that disjoint block ranges can be evaluated
from several threads at once.  Each block's partial sums are written to its
own row; paths inside a block are accumulated in index order.
"""

import math

import numba
import numpy as np


@numba.njit(nogil=True, cache=True)
def eval_blocks(
    g, z, tau0, lam, fslots, fdegs, bstarts, p, block, b_lo, b_hi, grad_part, val_part, sq_part, kstar
):
    m, n, d = g.shape
    nfac = fslots.shape[1]
    inv_sqrt_fact = np.empty(p + 1)
    f = 1.0
    for e in range(p + 1):
        if e > 0:
            f *= e
        inv_sqrt_fact[e] = 1.0 / math.sqrt(f)
    table = np.empty((n * d, p + 1))
    vals = np.empty(lam.shape[0])
    for b in range(b_lo, b_hi):
        lo = b * block
        hi = min(m, lo + block)
        gp = grad_part[b]
        gp[:] = 0.0
        vsum = 0.0
        ssum = 0.0
        for i in range(lo, hi):
            t0 = tau0[i]
            if t0 >= n:
                best = z[i, n]
                kstar[i] = n
            else:
                for s in range(n * d):
                    x = g[i, s // d, s % d]
                    table[s, 0] = 1.0
                    if p >= 1:
                        table[s, 1] = x
                    for e in range(1, p):
                        table[s, e + 1] = x * table[s, e] - e * table[s, e - 1]
                    for e in range(p + 1):
                        table[s, e] *= inv_sqrt_fact[e]
                best = z[i, t0]
                kbest = t0
                mart = 0.0
                for k in range(t0 + 1, n + 1):
                    acc = 0.0
                    for e in range(bstarts[k], bstarts[k + 1]):
                        v = 1.0
                        for c in range(nfac):
                            v *= table[fslots[e, c], fdegs[e, c]]
                        vals[e] = v
                        acc += lam[e] * v
                    mart += acc
                    cand = z[i, k] - mart
                    if cand > best:
                        best = cand
                        kbest = k
                kstar[i] = kbest
                for e in range(bstarts[t0 + 1], bstarts[kbest + 1]):
                    gp[e] -= vals[e]
            vsum += best
            ssum += best * best
        val_part[b] = vsum
        sq_part[b] = ssum
