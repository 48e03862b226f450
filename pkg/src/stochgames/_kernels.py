"""Jitted inner loops for exact chain propagation (hot path only)."""

import numpy as np
from numba import njit


@njit(cache=True)
def advance_chunk(Q, w, pay, d, occ):
    """Run the distribution d through one chunk of stage kernels.

    Per stage m: gamma += w[m] * <d, pay[m]>, occ += w[m] * d, d <- d Q[m].
    Mutates d and occ in place, returns the chunk's gamma contribution.
    """
    B, n, _ = Q.shape
    g = 0.0
    dn = np.empty(n)
    for m in range(B):
        s = 0.0
        for i in range(n):
            s += d[i] * pay[m, i]
        g += w[m] * s
        for i in range(n):
            occ[i] += w[m] * d[i]
        for j in range(n):
            acc = 0.0
            for i in range(n):
                acc += d[i] * Q[m, i, j]
            dn[j] = acc
        for j in range(n):
            d[j] = dn[j]
    return g


@njit(cache=True)
def advance_leading(lams, w, c1, e1, c2, e2, trans, pay, d, occ):
    """Fused stage loop for leading-term strategies.

    Per stage: build the clipped, renormalized profile c * lam^e directly
    from the expansion scalars (exponents 0 and 1 bypass pow), then push
    the distribution and accumulate gamma and occupation.  Equivalent to
    advance_chunk over kernels built from PuiseuxExpansion.profile_at,
    but without materializing any per-stage arrays.
    """
    B = lams.shape[0]
    n, I = c1.shape
    J = c2.shape[1]
    x = np.empty((n, I))
    y = np.empty((n, J))
    dn = np.empty(n)
    g = 0.0
    for m in range(B):
        lam = lams[m]
        for k in range(n):
            sx = 0.0
            for i in range(I):
                c = c1[k, i]
                if c > 0.0:
                    e = e1[k, i]
                    if e == 0.0:
                        v = c
                    elif e == 1.0:
                        v = c * lam
                    else:
                        v = c * lam ** e
                    if v > 1.0:
                        v = 1.0
                else:
                    v = 0.0
                x[k, i] = v
                sx += v
            inv = 1.0 / sx
            for i in range(I):
                x[k, i] *= inv
            sy = 0.0
            for j in range(J):
                c = c2[k, j]
                if c > 0.0:
                    e = e2[k, j]
                    if e == 0.0:
                        v = c
                    elif e == 1.0:
                        v = c * lam
                    else:
                        v = c * lam ** e
                    if v > 1.0:
                        v = 1.0
                else:
                    v = 0.0
                y[k, j] = v
                sy += v
            inv = 1.0 / sy
            for j in range(J):
                y[k, j] *= inv
        for l in range(n):
            dn[l] = 0.0
        s_pay = 0.0
        for k in range(n):
            dk = d[k]
            if dk == 0.0:
                continue
            for i in range(I):
                xi = x[k, i]
                if xi == 0.0:
                    continue
                for j in range(J):
                    wgt = dk * xi * y[k, j]
                    if wgt == 0.0:
                        continue
                    s_pay += wgt * pay[k, i, j]
                    for l in range(n):
                        dn[l] += wgt * trans[k, i, j, l]
        wm = w[m]
        g += wm * s_pay
        for k in range(n):
            occ[k] += wm * d[k]
            d[k] = dn[k]
    return g


@njit(cache=True)
def fold_product(Q, P):
    """P <- P @ Q[0] @ Q[1] ... in place."""
    B, n, _ = Q.shape
    tmp = np.empty((n, n))
    for m in range(B):
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += P[i, l] * Q[m, l, j]
                tmp[i, j] = acc
        for i in range(n):
            for j in range(n):
                P[i, j] = tmp[i, j]
