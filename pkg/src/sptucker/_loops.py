"""Compiled inner loops for the training phases.

These are flat-array versions of the per-sample reference operations in
factor_sgd/core_sgd, compiled with numba so epochs over millions of entries
stay cheap and workers (threads) run without the GIL.  Tests pin them
against the reference implementations.

Model packing: factors are concatenated row-major into one float64 vector
with per-mode offsets, so row i of mode n starts at foff[n] + i * jr[n];
core factors likewise with B(n)[j, r] at coff[n] + j * rcore + r.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def factor_pass(idx, vals, visit, fac, foff, cor, coff, jr, rcore, gammas, lambdas):
    """Sequential factor-row updates over the visited entry positions.

    For each sample, modes are processed in ascending order; the c table is
    recomputed at every mode because the previous row update stales it.
    """
    n_modes = jr.shape[0]
    jmax = 0
    for n in range(n_modes):
        if jr[n] > jmax:
            jmax = jr[n]
    c = np.empty((n_modes, rcore))
    gs = np.empty(jmax)
    for s in visit:
        x = vals[s]
        for n in range(n_modes):
            for n0 in range(n_modes):
                jn0 = jr[n0]
                abase = foff[n0] + idx[s, n0] * jn0
                bbase = coff[n0]
                for r in range(rcore):
                    acc = 0.0
                    for j in range(jn0):
                        acc += fac[abase + j] * cor[bbase + j * rcore + r]
                    c[n0, r] = acc
            jn = jr[n]
            for j in range(jn):
                gs[j] = 0.0
            bbase = coff[n]
            for r in range(rcore):
                w = 1.0
                for n0 in range(n_modes):
                    if n0 != n:
                        w *= c[n0, r]
                for j in range(jn):
                    gs[j] += w * cor[bbase + j * rcore + r]
            abase = foff[n] + idx[s, n] * jn
            inter = 0.0
            for j in range(jn):
                inter += fac[abase + j] * gs[j]
            gamma = gammas[n]
            lam = lambdas[n]
            for j in range(jn):
                g = -x * gs[j] + lam * fac[abase + j] + inter * gs[j]
                fac[abase + j] -= gamma * g
    return 0


@njit(cache=True, nogil=True)
def core_pass(idx, vals, visit, fac, foff, cor, coff, jr, rcore, acc, aoff):
    """Accumulate (xhat - x) * q into acc for every (mode, rank); model read-only.

    acc uses the core-factor layout: entry for (n, j, r) at aoff[n] + j*rcore + r.
    """
    n_modes = jr.shape[0]
    c = np.empty((n_modes, rcore))
    for s in visit:
        x = vals[s]
        for n0 in range(n_modes):
            jn0 = jr[n0]
            abase = foff[n0] + idx[s, n0] * jn0
            bbase = coff[n0]
            for r in range(rcore):
                dot = 0.0
                for j in range(jn0):
                    dot += fac[abase + j] * cor[bbase + j * rcore + r]
                c[n0, r] = dot
        xhat = 0.0
        for r in range(rcore):
            p = 1.0
            for n0 in range(n_modes):
                p *= c[n0, r]
            xhat += p
        resid = xhat - x
        for n in range(n_modes):
            jn = jr[n]
            abase = foff[n] + idx[s, n] * jn
            base = aoff[n]
            for r in range(rcore):
                w = 1.0
                for n0 in range(n_modes):
                    if n0 != n:
                        w *= c[n0, r]
                coef = resid * w
                for j in range(jn):
                    acc[base + j * rcore + r] += coef * fac[abase + j]
    return 0
