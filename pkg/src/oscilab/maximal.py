"""Uncentered maximal operators on sampled functions.

``M_r f = (M |f|^r)^(1/r)`` where ``M`` takes the supremum of averages over
all intervals containing the point, optionally only intervals of length at
most ``delta_trunc`` (the local operator ``M_delta``).  The operator acts on
the piecewise-linear interpolant of the nodal values ``|f|^r``.

The supremum is taken over intervals whose endpoints are candidate points
(grid nodes plus optional log-spaced points around singular points).  With
``polish=True`` the discrete maximizer is additionally refined by
golden-section search inside its neighbouring cells; the refinement is local,
so invariants such as monotonicity in the truncation length hold exactly only
for the candidate supremum (the default).  Two independent evaluation paths
exist:

``brute``
    Builds the full matrix of candidate-pair averages block by block, each
    row summed from its own left endpoint.
``fast``
    One streaming sweep over right endpoints using compensated prefix sums,
    so every interval average costs O(1).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .sampled import Interval, SampledFunction

__all__ = [
    "MaximalOptions",
    "StepFamilyParams",
    "GradientDecayFit",
    "maximal_at",
    "maximal_function",
    "maximal_detail",
    "analytic_maximal_step",
    "eta",
    "gradient_decay_estimate",
    "default_workers",
]

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("OSCILAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class MaximalOptions:
    """Options for ``M_r`` / ``M_delta``.

    ``singular_points=None`` means: use ``f.meta["singular_points"]`` if the
    function carries one.  ``candidate_density`` is the number of extra
    candidate endpoints per decade of distance around each singular point
    (0 disables the refinement).  ``polish`` switches on a local
    golden-section refinement of the maximizing endpoints inside their
    neighbouring cells.
    """

    r: float = 1.0
    delta_trunc: float | None = None
    algorithm: str = "fast"
    candidate_density: int = 0
    singular_points: tuple | None = None
    polish: bool = False
    workers: int | None = None

    def __post_init__(self):
        if not (0 < self.r <= 1):
            raise ValueError("r must lie in (0, 1]")
        if self.delta_trunc is not None and not self.delta_trunc > 0:
            raise ValueError("delta_trunc must be positive")
        if self.algorithm not in ("brute", "fast"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.candidate_density < 0:
            raise ValueError("candidate_density must be nonnegative")


# --------------------------------------------------------------------------
# candidate set


def _singular_points(f, opts):
    if opts.singular_points is not None:
        return tuple(opts.singular_points)
    return tuple(f.meta.get("singular_points", ()))


def _evaluation_points(f: SampledFunction, opts: MaximalOptions, extra=()):
    x = f.grid.nodes
    lo, hi = x[0], x[-1]
    pts = [x, np.asarray(extra, dtype=float)]
    dens = opts.candidate_density
    if dens:
        for p in _singular_points(f, opts):
            d = np.abs(x - p)
            d = d[d > 0]
            if d.size == 0:
                continue
            d_min, d_max = d.min(), max(abs(hi - p), abs(p - lo))
            nd = max(2, int(math.ceil(dens * math.log10(d_max / d_min))) + 1)
            dist = np.geomspace(d_min, d_max, nd)
            cand = np.concatenate([p - dist, p + dist, [p]])
            pts.append(cand[(cand > lo) & (cand < hi)])
    X = np.unique(np.concatenate(pts))
    g = np.abs(f.values) ** opts.r
    gX = np.interp(X, x, g)
    return X, gX


def _check_trunc(f, opts):
    d = opts.delta_trunc
    if d is not None and d > f.grid.length * (1 + 1e-12):
        raise ValueError("delta_trunc exceeds the hull length")
    return None if d is None else d * (1 + 1e-12)


# --------------------------------------------------------------------------
# fast path: compensated prefix sums, streaming over right endpoints


def _dd_prefix(cells):
    """Prefix sums as an unevaluated pair ``hi + lo`` (TwoSum compensation)."""
    n = cells.size
    hi = np.zeros(n + 1)
    lo = np.zeros(n + 1)
    s = 0.0
    e = 0.0
    for j, c in enumerate(cells.tolist()):
        t = s + c
        bp = t - s
        e += (s - (t - bp)) + (c - bp)
        s = t
        hi[j + 1] = s
        lo[j + 1] = e
    return hi, lo


def _fast_core(X, gX, targets, delta):
    m = X.size
    cells = 0.5 * np.diff(X) * (gX[1:] + gX[:-1])
    hi, lo = _dd_prefix(cells)
    best_val = np.full(m, -np.inf)
    best_b = np.zeros(m, dtype=np.int64)
    order = np.argsort(targets)
    tpos = np.asarray(targets)[order]
    k = tpos.size - 1
    vals = np.empty(len(targets))
    a_out = np.empty(len(targets), dtype=np.int64)
    b_out = np.empty(len(targets), dtype=np.int64)
    for i in range(m - 1, -1, -1):
        if i > 0:
            a0 = 0
            if delta is not None:
                a0 = int(np.searchsorted(X, X[i] - delta, side="left"))
            if a0 < i:
                num = (hi[i] - hi[a0:i]) + (lo[i] - lo[a0:i])
                v = num / (X[i] - X[a0:i])
                cur = best_val[a0:i]
                upd = v > cur
                cur[upd] = v[upd]
                best_b[a0:i][upd] = i
        while k >= 0 and tpos[k] == i:
            seg = best_val[: i + 1]
            j = int(np.argmax(seg))
            slot = order[k]
            vals[slot], a_out[slot], b_out[slot] = seg[j], j, best_b[j]
            k -= 1
    return vals, a_out, b_out, (hi, lo)


def _fast_integral(X, gX, prefix):
    hi, lo = prefix
    m = X.size

    def integral(a, b):
        ja = np.clip(np.searchsorted(X, a, side="right") - 1, 0, m - 2)
        jb = np.clip(np.searchsorted(X, b, side="right") - 1, 0, m - 2)
        return (hi[jb] - hi[ja]) + (lo[jb] - lo[ja]) + (
            _partial(X, gX, jb, b) - _partial(X, gX, ja, a)
        )

    return integral


def _partial(X, gX, j, x):
    """``int_{X[j]}^{x} g`` for ``x`` in cell ``j`` (linear ``g``)."""
    h = X[j + 1] - X[j]
    gx = gX[j] + (gX[j + 1] - gX[j]) * ((x - X[j]) / h)
    return 0.5 * (x - X[j]) * (gX[j] + gx)


# --------------------------------------------------------------------------
# brute path: explicit pair matrix, each row summed from its own anchor


def _brute_block(X, cells, a0, a1, targets, delta):
    m = X.size
    rows = np.arange(a0, a1)
    j = np.arange(a0, m - 1)
    masked = np.where(j[None, :] >= rows[:, None], cells[None, a0:], 0.0)
    S = np.cumsum(masked, axis=1)  # S[r, j - a0] = int_{X[a]}^{X[j+1]}
    b = j + 1
    den = X[b][None, :] - X[rows][:, None]
    valid = b[None, :] > rows[:, None]
    if delta is not None:
        valid &= den <= delta
    with np.errstate(divide="ignore", invalid="ignore"):
        V = np.where(valid, S / np.where(valid, den, 1.0), -np.inf)
    W = np.maximum.accumulate(V[:, ::-1], axis=1)[:, ::-1]
    t = np.asarray(targets)
    col = np.clip(t - (a0 + 1), 0, b.size - 1)
    Wt = W[:, col]
    Wt = np.where(rows[:, None] <= t[None, :], Wt, -np.inf)
    r = np.argmax(Wt, axis=0)
    return Wt[r, np.arange(t.size)], rows[r]


def _brute_core(X, gX, targets, delta, workers=1, block=256):
    m = X.size
    cells = 0.5 * np.diff(X) * (gX[1:] + gX[:-1])
    t = np.asarray(targets)
    amax = int(t.max())
    starts = list(range(0, min(amax + 1, m - 1), block))
    jobs = [(a0, min(a0 + block, amax + 1, m - 1)) for a0 in starts]

    def run(job):
        return _brute_block(X, cells, job[0], job[1], t, delta)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(jb) for jb in jobs]

    vals = np.full(t.size, -np.inf)
    a_out = np.zeros(t.size, dtype=np.int64)
    for v, a in results:  # block order fixed, first block wins ties
        upd = v > vals
        vals[upd] = v[upd]
        a_out[upd] = a[upd]

    b_out = np.zeros(t.size, dtype=np.int64)
    for n, (ti, ai) in enumerate(zip(t.tolist(), a_out.tolist())):
        if not np.isfinite(vals[n]):
            b_out[n] = min(ti + 1, m - 1)
            continue
        S = np.cumsum(cells[ai:])
        bb = np.arange(ai + 1, m)
        V = S / (X[bb] - X[ai])
        ok = bb >= ti
        if delta is not None:
            ok &= (X[bb] - X[ai]) <= delta
        V = np.where(ok, V, -np.inf)
        b_out[n] = bb[int(np.argmax(V))]
    return vals, a_out, b_out, cells


def _brute_integral(X, gX, cells, a_idx, b_idx):
    """Integral over [a, b] for a near X[a_idx], b near X[b_idx].

    ``base`` is the signed integral between the anchors X[a_idx+1] and
    X[b_idx-1]; the two ends are signed local integrals over at most four
    cells around each anchor.
    """
    m = X.size
    A = np.minimum(a_idx + 1, m - 1)
    B = np.maximum(b_idx - 1, 0)
    base = np.empty(a_idx.size)
    for n, (lo, hi) in enumerate(zip(A.tolist(), B.tolist())):
        base[n] = np.sum(cells[lo:hi]) if hi >= lo else -np.sum(cells[hi:lo])

    def local(anchor, x):
        total = np.zeros(x.shape)
        lo = np.minimum(anchor, x)
        hi = np.maximum(anchor, x)
        sign = np.where(x >= anchor, 1.0, -1.0)
        anchor_idx = np.searchsorted(X, anchor)
        for off in (-2, -1, 0, 1):
            j = anchor_idx + off
            ok = (j >= 0) & (j <= m - 2)
            jc = np.clip(j, 0, m - 2)
            p = np.maximum(X[jc], lo)
            q = np.minimum(X[jc + 1], hi)
            ok &= q > p
            h = X[jc + 1] - X[jc]
            gp = gX[jc] + (gX[jc + 1] - gX[jc]) * ((p - X[jc]) / h)
            gq = gX[jc] + (gX[jc + 1] - gX[jc]) * ((q - X[jc]) / h)
            total += np.where(ok, 0.5 * (q - p) * (gp + gq), 0.0)
        return sign * total

    XA, XB = X[A], X[B]

    def integral(a, b):
        return base + local(XB, b) - local(XA, a)

    return integral


# --------------------------------------------------------------------------
# polish


def _golden_max(F, lo, hi, iters=64):
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    c = hi - _GOLD * (hi - lo)
    d = lo + _GOLD * (hi - lo)
    fc, fd = F(c), F(d)
    for _ in range(iters):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new = np.where(left, hi - _GOLD * (hi - lo), lo + _GOLD * (hi - lo))
        fn = F(new)
        d, fd, c, fc = (
            np.where(left, c, new),
            np.where(left, fc, fn),
            np.where(left, new, d),
            np.where(left, fn, fd),
        )
    pick = fc >= fd
    return np.where(pick, c, d), np.where(pick, fc, fd)


def _polish(X, t, a_idx, b_idx, vals, integral, delta, rounds=2):
    m = X.size
    xt = X[t]
    a = X[a_idx].astype(float)
    b = X[b_idx].astype(float)
    best = vals.copy()

    def avg(lo_pt, hi_pt):
        den = hi_pt - lo_pt
        with np.errstate(divide="ignore", invalid="ignore"):
            out = integral(lo_pt, hi_pt) / den
        return np.where(den > 0, out, -np.inf)

    for _ in range(rounds):
        lo = X[np.maximum(a_idx - 1, 0)]
        hi = np.minimum(X[np.minimum(a_idx + 1, m - 1)], xt)
        if delta is not None:
            lo = np.maximum(lo, b - delta)
        lo = np.minimum(lo, hi)
        bb = b
        an, fa = _golden_max(lambda s: avg(s, bb), lo, hi)
        upd = fa > best
        a = np.where(upd, an, a)
        best = np.where(upd, fa, best)

        lo = np.maximum(X[np.maximum(b_idx - 1, 0)], xt)
        hi = X[np.minimum(b_idx + 1, m - 1)]
        if delta is not None:
            hi = np.minimum(hi, a + delta)
        hi = np.maximum(lo, hi)
        aa = a
        bn, fb = _golden_max(lambda s: avg(aa, s), lo, hi)
        upd = fb > best
        b = np.where(upd, bn, b)
        best = np.where(upd, fb, best)
    return best, a, b


# --------------------------------------------------------------------------
# public operators


def _run(f, opts, X, gX, targets):
    delta = _check_trunc(f, opts)
    t = np.asarray(targets, dtype=np.int64)
    workers = opts.workers or default_workers()
    if opts.algorithm == "fast":
        vals, a_idx, b_idx, prefix = _fast_core(X, gX, t, delta)
    else:
        vals, a_idx, b_idx, cells = _brute_core(X, gX, t, delta, workers)
    point = gX[t]
    a_pos, b_pos = X[a_idx].astype(float), X[b_idx].astype(float)
    live = np.isfinite(vals) & (vals > point)
    if opts.polish and np.any(live):
        sel = np.flatnonzero(live)
        if opts.algorithm == "fast":
            integral = _fast_integral(X, gX, prefix)
        else:
            integral = _brute_integral(X, gX, cells, a_idx[sel], b_idx[sel])
        pv, pa, pb = _polish(X, t[sel], a_idx[sel], b_idx[sel], vals[sel], integral, delta)
        vals[sel], a_pos[sel], b_pos[sel] = pv, pa, pb
    dead = ~(vals > point)
    vals = np.where(dead, point, vals)
    a_pos = np.where(dead, X[t], a_pos)
    b_pos = np.where(dead, X[t], b_pos)
    return vals, a_pos, b_pos


def _finish(vals, r):
    vals = np.maximum(vals, 0.0)
    return vals if r == 1 else vals ** (1.0 / r)


def maximal_detail(f: SampledFunction, opts: MaximalOptions = MaximalOptions()):
    """Maximal function at every node plus the maximizing interval ends.

    Returns ``(values, a, b)`` where ``[a[i], b[i]]`` attains the supremum
    at node ``i`` (``a == b`` when the point value itself is the maximum).
    """
    X, gX = _evaluation_points(f, opts)
    targets = np.searchsorted(X, f.grid.nodes)
    vals, a, b = _run(f, opts, X, gX, targets)
    return _finish(vals, opts.r), a, b


def maximal_function(f: SampledFunction, opts: MaximalOptions = MaximalOptions()) -> SampledFunction:
    """``M_r f`` (or ``M_delta`` with truncation) at every grid node."""
    vals, _, _ = maximal_detail(f, opts)
    return f.with_values(vals, maximal_r=opts.r, maximal_trunc=opts.delta_trunc)


def maximal_at(f: SampledFunction, x: float, opts: MaximalOptions = MaximalOptions()) -> float:
    """``M_r f(x)`` for one point ``x`` of the hull (brute-force evaluation)."""
    lo, hi = f.grid.hull
    if not (lo <= x <= hi):
        raise ValueError(f"x={x} outside the grid hull [{lo}, {hi}]")
    X, gX = _evaluation_points(f, opts, extra=[x])
    t = int(np.searchsorted(X, x))
    brute = MaximalOptions(
        r=opts.r, delta_trunc=opts.delta_trunc, algorithm="brute",
        candidate_density=opts.candidate_density,
        singular_points=opts.singular_points, polish=opts.polish, workers=1,
    )
    vals, _, _ = _run(f, brute, X, gX, [t])
    return float(_finish(vals, opts.r)[0])


# --------------------------------------------------------------------------
# closed form for the plateau family


@dataclass(frozen=True)
class StepFamilyParams:
    """Plateau ``s^-delta`` on ``[-s, s]``, linear ramps of width ``eps``, background ``C``."""

    s: float
    delta_exp: float
    eps: float
    C: float = 2.0

    def __post_init__(self):
        if not (self.s > 0 and self.delta_exp > 0 and self.eps > 0):
            raise ValueError("s, delta_exp and eps must be positive")
        if self.eps > self.s / 10 * (1 + 1e-12):
            raise ValueError("ramp width eps must satisfy eps <= s/10")

    @property
    def height(self) -> float:
        return self.s ** (-self.delta_exp)

    @property
    def excess_mass(self) -> float:
        """``int (f - C)`` of the unmollified profile: plateau plus both ramps."""
        return self.height * (2 * self.s + self.eps)


def eta(x, s, eps):
    """``2(x - s) / (x + sqrt(x^2 + 2 eps (x - s)))``, the optimal ramp fraction."""
    x = np.asarray(x, dtype=float)
    out = 2 * (x - s) / (x + np.sqrt(x * x + 2 * eps * (x - s)))
    return float(out) if out.ndim == 0 else out


def analytic_maximal_step(p: StepFamilyParams, x, *, form: str = "exact"):
    """Closed-form ``M f(x)`` for ``x > s + eps`` on the unmollified plateau profile.

    ``form="exact"`` measures distances from the far plateau edge ``-s``:
    with ``D = x + s`` and ``K = 2s + eps/2`` (plateau plus the near ramp,
    in units of the height ``H``) the best interval is ``[-s - eta*eps, x]``
    and ``M f = C + H (K + (1 - eta/2) eta eps) / (D + eta eps)`` with
    ``eta = eta(D, K, eps)``.

    ``form="printed"`` evaluates the same expression with ``D = x``,
    ``eta = eta(x, s, eps)`` and numerator mass ``A = H (2s + eps)``, i.e.
    exactly as the formula is usually quoted.  It is a one-sided
    approximation and overestimates ``M f`` by roughly ``s / x``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= p.s + p.eps):
        raise ValueError("closed form holds only for x > s + eps")
    H = p.height
    if form == "exact":
        D = x + p.s
        K = 2 * p.s + 0.5 * p.eps
        e = eta(D, K, p.eps)
        out = p.C + H * (K + (1 - e / 2) * e * p.eps) / (D + e * p.eps)
    elif form == "printed":
        e = eta(x, p.s, p.eps)
        out = p.C + (p.excess_mass + H * (1 - e / 2) * e * p.eps) / (x + e * p.eps)
    else:
        raise ValueError(f"unknown form {form!r}")
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# gradient decay


@dataclass(frozen=True)
class GradientDecayFit:
    slope: float
    half_width: float
    n_points: int
    decade: tuple
    degenerate: bool = False
    message: str = ""


def gradient_decay_estimate(
    family,
    opts: MaximalOptions = MaximalOptions(r=0.5),
    *,
    decade: tuple | None = None,
) -> GradientDecayFit:
    """Fit ``sup_t |d/dx M_r f_t| ~ x^slope`` over one decade of ``x > 0``.

    Central differences (second order on nonuniform grids) of ``M_r f_t``
    are maximized over the family at every node, then ``log |grad|`` is
    regressed on ``log x``.  The half-width is the 95% confidence
    half-width of the slope.
    """
    family = list(family)
    if not family:
        raise ValueError("empty family")
    grid = family[0].grid
    for f in family[1:]:
        if f.grid != grid:
            raise ValueError("family members must share a grid")
    x = grid.nodes
    x_hi = x[-1]
    if decade is None:
        decade = (x_hi * 10 ** -2.5, x_hi * 10 ** -1.5)
    lo, hi = decade
    sel = (x >= lo) & (x <= hi)
    if sel.sum() < 16 * math.log10(hi / lo) * (1 - 1e-9):
        raise ValueError("grid too coarse for differencing (< 16 nodes per decade)")

    grads = []
    scale = 0.0
    for f in family:
        Mf = maximal_function(f, opts).values
        grads.append(np.abs(np.gradient(Mf, x)))
        scale = max(scale, float(np.max(np.abs(Mf))))
    g = np.max(grads, axis=0)[sel]
    xs = x[sel]
    if np.all(g <= 1e-12 * max(scale, 1e-300)):
        return GradientDecayFit(float("nan"), float("nan"), int(xs.size), tuple(decade),
                                True, "degenerate: zero gradient")
    keep = g > 0
    fit = stats.linregress(np.log(xs[keep]), np.log(g[keep]))
    n = int(keep.sum())
    half = float(stats.t.ppf(0.975, n - 2) * fit.stderr)
    return GradientDecayFit(float(fit.slope), half, n, tuple(decade))
