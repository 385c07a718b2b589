"""Independent reference implementations used by the tests.

These share no code with the library: they rebuild interpolants with
``np.interp`` and integrate cell by cell.
"""

import numpy as np
from scipy.optimize import minimize


def node_pair_oracle(f, r=1.0, trunc=None):
    """Sup over node pairs [x_i, x_j] containing x_t of the mean of |f|^r, O(n^3)."""
    x = f.grid.nodes
    g = np.abs(f.values) ** r
    cum = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(x) * (g[1:] + g[:-1]))])
    n = x.size
    out = g.copy()
    for t in range(n):
        i = np.arange(t + 1)[:, None]
        j = np.arange(t, n)[None, :]
        L = x[j] - x[i]
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = (cum[j] - cum[i]) / L
        ok = L > 0
        if trunc is not None:
            ok &= L <= trunc
        if ok.any():
            out[t] = max(out[t], avg[ok].max())
    return out ** (1 / r)


def mean_osc(x, y, a, b):
    """Mean of |y - mean| over [a, b] for the linear interpolant of (x, y)."""
    inner = x[(x > a) & (x < b)]
    P = np.concatenate([[a], inner, [b]])
    Y = np.interp(P, x, y)
    h = np.diff(P)
    m = np.sum(h * (Y[1:] + Y[:-1])) / 2 / (b - a)
    d0, d1 = Y[:-1] - m, Y[1:] - m
    same = d0 * d1 >= 0
    s = np.abs(d0) + np.abs(d1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cross = np.where(s > 0, (d0 * d0 + d1 * d1) / np.where(s > 0, s, 1), 0.0)
    return np.sum(h * np.where(same, s, cross)) / 2 / (b - a)


def local_bmo_sup(x, y, lmin, top, n_len=60, n_pos=200, keep=6, weight=None):
    """Sup of mean oscillation over lengths in [lmin, top], divided by ``weight(length)``.

    Exhaustive scan over log-spaced lengths crossed with uniform and
    node-aligned positions, then a simplex refinement of the best few.
    """
    if weight is None:
        def weight(ell):
            return 1.0
    lo, hi = x[0], x[-1]
    cands = []
    for ell in np.geomspace(lmin, top, n_len):
        pos = np.unique(np.concatenate([np.linspace(lo, hi - ell, n_pos), x, x - ell]))
        pos = pos[(pos >= lo) & (pos <= hi - ell)]
        v = np.array([mean_osc(x, y, a, a + ell) for a in pos]) / weight(ell)
        j = int(np.argmax(v))
        cands.append((v[j], pos[j], ell))
    cands.sort(reverse=True)
    best = cands[0][0]
    for _, a, ell in cands[:keep]:
        def neg(p):
            l_ = min(max(p[1], lmin), top)
            a_ = min(max(p[0], lo), hi - l_)
            return -mean_osc(x, y, a_, a_ + l_) / weight(l_)

        simplex = [[a, ell], [a + 1e-3 * ell, ell], [a, ell * (1 + 1e-3)]]
        res = minimize(neg, [a, ell], method="Nelder-Mead",
                       options={"xatol": 1e-14, "fatol": 0, "maxiter": 4000,
                                "initial_simplex": simplex})
        best = max(best, -res.fun)
    return best
