"""Mean oscillation and weighted local bmo norms.

The weighted local bmo norm of ``f`` is

    ||f||_1 + sup_{|Q| < delta} (1 / phi(|Q|)) * mean_Q |f - f_Q|

where the weight is evaluated at the interval length.  The supremum is
found by a lattice search (log-spaced lengths crossed with positions that
concentrate near focus points) followed by golden-section polish.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .maximal import _golden_max
from .sampled import Interval, SampledFunction, abs_cell_integrals, average, integrate_abs
from .weights import LogWeight, reciprocal_phi_star

__all__ = [
    "OscillationReport",
    "DerivativeCheckReport",
    "mean_oscillation",
    "batch_mean_oscillation",
    "search_lattice",
    "weighted_bmo_norm",
    "multiplier_inequality_ratio",
    "derivative_oscillation_check",
]

RECIPROCAL_NOTE = (
    "middle factor uses the weight r -> 1/phi_star(r) (reciprocal reading; "
    "the functional-inverse reading is not computed)"
)


def mean_oscillation(f: SampledFunction, Q: Interval) -> float:
    """``mean_Q |f - f_Q|`` for the piecewise-linear interpolant."""
    c = average(f, Q)
    return integrate_abs(f, Q, offset=c) / Q.length


def batch_mean_oscillation(x, y, a, b, *, budget: int = 2_000_000) -> np.ndarray:
    """Vectorized ``mean_[a,b] |f - f_[a,b]|`` for many intervals at once.

    Intervals are grouped by the number of nodes they contain so that the
    padded work arrays stay below ``budget`` entries.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = x.size
    ia = np.searchsorted(x, a, side="right")
    ib = np.searchsorted(x, b, side="left")
    cnt = np.maximum(ib - ia, 0)
    ya = np.interp(a, x, y)
    yb = np.interp(b, x, y)
    out = np.empty(a.size)
    order = np.argsort(cnt, kind="stable")
    start = 0
    N = a.size
    while start < N:
        m = max(1, budget // (int(cnt[order[start]]) + 2))
        end = min(start + m, N)
        K = int(cnt[order[end - 1]]) + 2
        if K * (end - start) > 2 * budget:
            end = start + max(1, budget // K)
            K = int(cnt[order[end - 1]]) + 2
        sel = order[start:end]
        j = ia[sel][:, None] + np.arange(K - 2)[None, :]
        inside = j < ib[sel][:, None]
        jc = np.minimum(j, n - 1)
        bs = b[sel][:, None]
        P = np.concatenate([a[sel][:, None], np.where(inside, x[jc], bs), bs], axis=1)
        Y = np.concatenate(
            [ya[sel][:, None], np.where(inside, y[jc], yb[sel][:, None]), yb[sel][:, None]],
            axis=1,
        )
        h = np.diff(P, axis=1)
        L = b[sel] - a[sel]
        mean = np.sum(0.5 * h * (Y[:, 1:] + Y[:, :-1]), axis=1) / L
        D = Y - mean[:, None]
        out[sel] = np.sum(abs_cell_integrals(h, D[:, :-1], D[:, 1:]), axis=1) / L
        start = end
    return out


# --------------------------------------------------------------------------
# weights


def _weight(w):
    if isinstance(w, LogWeight):
        return w.phi, w.label, w
    if callable(w):
        return w, getattr(w, "label", "tabulated"), None
    raise TypeError("weight must be a LogWeight or a callable")


# --------------------------------------------------------------------------
# lattice


def _lengths(x, delta, density):
    L = x[-1] - x[0]
    l_min = 4 * float(np.min(np.diff(x)))
    top = delta * (1 - 1e-12) if delta <= L else L
    if not l_min < top:
        raise ValueError("hull or delta shorter than the minimal resolvable interval")
    nj = int(math.floor(density * math.log10(top / l_min) * (1 - 1e-15))) + 1
    ls = l_min * 10.0 ** (np.arange(nj) / density)
    ls = ls[ls < top * (1 - 1e-9)]
    return np.append(ls, top)


def _positions(x, ell, density, focus):
    lo, hi = x[0], x[-1] - ell
    L = x[-1] - x[0]
    h_min = float(np.min(np.diff(x)))
    parts = [np.linspace(lo, hi, density + 1)]
    nodes = np.concatenate([x, x - ell])
    nodes = nodes[(nodes >= lo) & (nodes <= hi)]
    if nodes.size:
        nodes = np.sort(nodes)
        _, first = np.unique(np.floor((nodes - lo) / (ell / 8)), return_index=True)
        parts.append(nodes[first])
    # offsets much shorter than the interval give nearly identical intervals
    d0 = max(h_min, ell / 64)
    nd = max(2, int(math.ceil(density * math.log10(L / d0))) + 1)
    d = np.geomspace(d0, L, nd)
    theta = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    for p in focus:
        parts += [p + d, p - ell - d, p - theta * ell]
    a = np.unique(np.clip(np.concatenate(parts), lo, hi))
    # drop left endpoints too large in magnitude to carry this length
    ok = np.abs((a + ell) - a - ell) <= 1e-6 * ell
    return a[ok] if ok.any() else a[np.argmin(np.abs(a))][None]


def search_lattice(f: SampledFunction, delta: float, density: int = 16, focus=()):
    """The ``(length, positions)`` pairs examined by :func:`weighted_bmo_norm`.

    Lengths are ``4 * min cell * 10**(j / density)`` below ``delta`` plus
    the top length ``delta * (1 - 1e-12)`` (or the hull length when that is
    smaller).  Positions are left endpoints.
    """
    if density < 1:
        raise ValueError("density must be a positive integer")
    x = f.grid.nodes
    pts = tuple(focus) + tuple(f.meta.get("singular_points", ()))
    pts = tuple(sorted(set(float(p) for p in pts if x[0] <= p <= x[-1])))
    return [(float(ell), _positions(x, ell, density, pts)) for ell in _lengths(x, delta, density)]


# --------------------------------------------------------------------------
# report


@dataclass(frozen=True, eq=False)
class OscillationReport:
    """Result of a weighted bmo norm evaluation.

    Lengths and interval endpoints are in grid units; the weight was
    evaluated at ``length * length_scale``.
    """

    l1_part: float
    sup_part: float
    argmax_interval: Interval
    per_scale_lengths: np.ndarray
    per_scale_values: np.ndarray
    delta: float
    weight_label: str = ""
    length_scale: float = 1.0
    notes: tuple = ()

    @property
    def norm_value(self) -> float:
        return self.l1_part + self.sup_part

    @property
    def per_scale(self):
        return list(zip(self.per_scale_lengths.tolist(), self.per_scale_values.tolist()))

    def to_dict(self) -> dict:
        return {
            "l1_part": self.l1_part,
            "sup_part": self.sup_part,
            "norm_value": self.norm_value,
            "argmax_a": self.argmax_interval.a,
            "argmax_b": self.argmax_interval.b,
            "per_scale": [{"length": l, "value": v} for l, v in self.per_scale],
            "delta": self.delta,
            "weight": self.weight_label,
            "length_scale": self.length_scale,
            "notes": list(self.notes),
        }


def _workers(workers):
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get("OSCILAB_THREADS", "1")))
    except ValueError:
        return 1


def weighted_bmo_norm(
    f: SampledFunction,
    w,
    delta: float,
    density: int = 16,
    *,
    focus=(),
    length_scale: float = 1.0,
    polish: bool = True,
    peaks: int = 4,
    n_starts: int = 4,
    workers: int | None = None,
) -> OscillationReport:
    """Weighted local bmo norm of ``f`` with weight ``w`` and cutoff ``delta``.

    Parameters
    ----------
    f : SampledFunction
        Function on its grid.  ``f.meta["singular_points"]`` and ``focus``
        are points near which positions are refined.
    w : LogWeight or callable
        Weight ``phi``; it is evaluated at the interval length.
    delta : float
        Only intervals with ``|Q| < delta`` (grid units) are admitted.
    density : int
        Lengths per decade and the base number of uniform positions.
    length_scale : float
        Physical size of one grid unit.  The weight sees
        ``length * length_scale`` and the L1 part is multiplied by it.
    polish : bool
        Refine the lattice winners by golden-section search.
    peaks : int
        Local maxima in position refined at every length.
    n_starts : int
        Number of refined candidates (strongest first) that are then
        polished jointly in length and position.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    phi, label, lw = _weight(w)
    if lw is not None and lw.x_safe > 0 and not delta * length_scale < lw.x_safe:
        raise ValueError(f"delta={delta} (scaled {delta * length_scale}) is not below x_safe={lw.x_safe}")
    x, y = f.grid.nodes, f.values
    lattice = search_lattice(f, delta, density, focus)
    lengths = np.array([ell for ell, _ in lattice])
    wl = np.asarray(phi(lengths * length_scale), dtype=float)

    def scan(k):
        ell, pos = lattice[k]
        v = batch_mean_oscillation(x, y, pos, pos + ell) / wl[k]
        js = _peaks(v, peaks)
        lo_n = pos[np.maximum(js - 1, 0)]
        hi_n = pos[np.minimum(js + 1, pos.size - 1)]
        return np.full(js.size, k), v[js], pos[js], lo_n, hi_n

    nw = _workers(workers)
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as ex:
            rows = list(ex.map(scan, range(len(lattice))))
    else:
        rows = [scan(k) for k in range(len(lattice))]
    idx, cv, cp, lo_b, hi_b = (np.concatenate(c) for c in zip(*rows))

    if polish:
        def F(a):
            return batch_mean_oscillation(x, y, a, a + lengths[idx]) / wl[idx]

        pa, pv = _golden_max(F, lo_b, hi_b)
        upd = pv > cv
        cv = np.where(upd, pv, cv)
        cp = np.where(upd, pa, cp)

    # per-length winners; candidates are grouped by length in lattice order
    vals = np.full(lengths.size, -np.inf)
    np.maximum.at(vals, idx, cv)
    pick = np.flatnonzero(cv == vals[idx])
    pick = pick[np.unique(idx[pick], return_index=True)[1]]
    pos = cp[pick]

    k = int(np.argmax(vals))  # first maximum: smallest length wins ties
    best_l, best_a, best_v = lengths[k], pos[k], vals[k]
    if polish and best_v > 0:
        # joint polish from the strongest refined candidates: a ridge can
        # peak between lattice lengths away from the global winner
        for c in np.argsort(-cv, kind="stable")[:n_starts].tolist():
            j = int(idx[c])
            cand = _joint_polish(
                x, y, phi, length_scale, lengths[j], cp[c], cv[c],
                gap=max(hi_b[c] - cp[c], cp[c] - lo_b[c]),
                rho=10.0 ** (1.0 / density), bottom=lengths[0], top=lengths[-1],
            )
            if cand[2] > best_v:
                best_l, best_a, best_v = cand
                k = j
    table_l, table_v = lengths.copy(), vals.copy()
    if best_l != lengths[k]:
        ins = int(np.searchsorted(table_l, best_l))
        table_l = np.insert(table_l, ins, best_l)
        table_v = np.insert(table_v, ins, best_v)
    else:
        table_v[k] = best_v

    l1 = integrate_abs(f, Interval(*f.grid.hull)) * length_scale
    return OscillationReport(
        l1_part=float(l1),
        sup_part=float(best_v),
        argmax_interval=Interval(float(best_a), float(best_a + best_l)),
        per_scale_lengths=table_l,
        per_scale_values=table_v,
        delta=float(delta),
        weight_label=label,
        length_scale=float(length_scale),
    )


def _peaks(v, n):
    """Indices of the ``n`` largest local maxima of ``v`` (largest first)."""
    pad = np.concatenate([[-np.inf], v, [-np.inf]])
    idx = np.flatnonzero((v >= pad[:-2]) & (v >= pad[2:]))
    if idx.size == 0:
        return np.array([int(np.argmax(v))])
    return idx[np.argsort(-v[idx], kind="stable")[:n]]


def _joint_polish(x, y, phi, scale, ell, a, v, *, gap, rho, bottom, top, rounds=3):
    lo_x, hi_x = x[0], x[-1]
    A = np.array([a])
    Lv = np.array([ell])
    best = v
    for _ in range(rounds):
        cur_l = float(Lv[0])
        w_l = float(phi(cur_l * scale))
        lo = np.array([max(lo_x, A[0] - gap)])
        hi = np.array([min(hi_x - cur_l, A[0] + gap)])
        if hi[0] > lo[0]:
            na, nv = _golden_max(
                lambda s: batch_mean_oscillation(x, y, s, s + cur_l) / w_l, lo, hi
            )
            if nv[0] > best:
                A, best = na, float(nv[0])
        cur_a = float(A[0])
        lo = np.array([max(cur_l / rho, bottom)])
        hi = np.array([min(cur_l * rho, top, hi_x - cur_a)])
        if hi[0] > lo[0]:
            nl, nv = _golden_max(
                lambda s: batch_mean_oscillation(x, y, np.full(s.shape, cur_a), cur_a + s)
                / np.asarray(phi(s * scale), dtype=float),
                lo, hi,
            )
            if nv[0] > best:
                Lv, best = nl, float(nv[0])
    # coordinate ascent crawls along diagonal ridges; finish with a simplex
    # search in coordinates scaled to the current length
    a0, l0 = float(A[0]), float(Lv[0])
    l_lo, l_hi = bottom, top

    def neg(p):
        s, ln = a0 + p[0] * l0, l0 * (1.0 + p[1])
        if not (l_lo <= ln <= l_hi and lo_x <= s and s + ln <= hi_x and s + ln > s):
            return np.inf
        val = batch_mean_oscillation(x, y, np.array([s]), np.array([s + ln]))[0]
        return -float(val / float(phi(ln * scale)))

    step = 1e-3
    with np.errstate(invalid="ignore"):
        res = minimize(
            neg, np.zeros(2), method="Nelder-Mead",
            options={"xatol": 1e-13, "fatol": 0.0, "maxiter": 800,
                     "initial_simplex": np.array([[0.0, 0.0], [step, 0.0], [0.0, step]])},
        )
    if np.isfinite(res.fun) and -res.fun > best:
        a0, l0, best = a0 + res.x[0] * l0, l0 * (1.0 + res.x[1]), float(-res.fun)
    return l0, a0, best


# --------------------------------------------------------------------------
# multiplier inequality


def multiplier_inequality_ratio(
    f: SampledFunction, g: SampledFunction, w: LogWeight, delta: float, density: int = 8
) -> float:
    """``||f g||_bmo / (||f||_bmo_phi * (||g||_inf + [g]_{1/phi_star}))``.

    The numerator and the ``f`` factor are full norms (L1 part plus
    supremum).  The ``g`` side pairs the sup norm with the oscillation
    seminorm under the reciprocal weight ``1/phi_star``, so constants give
    ratio 1.
    """
    if f.grid != g.grid:
        raise ValueError("f and g must share a grid")
    one = LogWeight(0)
    num = weighted_bmo_norm(f * g, one, delta, density).norm_value
    nf = weighted_bmo_norm(f, w, delta, density).norm_value
    ng = g.sup_norm() + weighted_bmo_norm(g, reciprocal_phi_star(w), delta, density).sup_part
    den = nf * ng
    if not den > 0:
        raise ValueError("denominator is zero")
    return num / den


# --------------------------------------------------------------------------
# derivative <-> oscillation


@dataclass
class DerivativeCheckReport:
    """Constants from both directions of the derivative/oscillation link.

    ``hypothesis_constant`` is ``max |x f'(x)| / phi(|x|)``; the forward
    direction then bounds ``forward_constant`` (the sup of
    ``mean_I |f - f_I| / phi(|I|)``).  ``converse_derivative_constant`` is
    the same derivative ratio restricted to ``(0, near]`` and
    ``converse_psi_constant`` is ``max psi(x) / phi(4x)``.
    """

    hypothesis_constant: float
    forward_constant: float
    converse_derivative_constant: float
    converse_psi_constant: float
    convexity_constant: float
    hypotheses: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "hypothesis_constant": self.hypothesis_constant,
            "forward_constant": self.forward_constant,
            "converse_derivative_constant": self.converse_derivative_constant,
            "converse_psi_constant": self.converse_psi_constant,
            "convexity_constant": self.convexity_constant,
            "hypotheses": dict(self.hypotheses),
            "messages": list(self.messages),
        }


def derivative_oscillation_check(
    f: SampledFunction,
    w: LogWeight,
    *,
    delta: float | None = None,
    density: int = 16,
    near: float | None = None,
    psi=None,
) -> DerivativeCheckReport:
    """Check ``|x f'| <= c phi`` against the weighted oscillation bound.

    Derivatives are second-order finite differences on the positive
    half-grid.  ``psi`` defaults to ``|x f'(x)|``.  Violated hypotheses are
    recorded in ``hypotheses`` and ``messages``; the constants are still
    computed.
    """
    x_all = f.grid.nodes
    lo, hi = f.grid.hull
    msgs = []
    hyp = {}
    pos = x_all > 0
    if pos.sum() < 3:
        raise ValueError("need at least three grid nodes with x > 0")
    x = x_all[pos]
    y = f.values[pos]
    # differencing y - y[0] keeps constants exactly flat on nonuniform grids
    d1 = np.gradient(y - y[0], x)
    dom = w.in_domain(x)
    xd, d1d = x[dom], d1[dom]
    phi_x = w.phi(xd)
    xfp = np.abs(xd * d1d)
    hyp_c = float(np.max(xfp / phi_x)) if xd.size else float("nan")

    # evenness on the mirrored part of the hull
    m = min(-lo, hi)
    if m > 0:
        xs = x[x <= m]
        err = float(np.max(np.abs(f(xs) - f(-xs)))) if xs.size else 0.0
        scale = max(float(np.max(np.abs(f.values))), 1e-300)
        hyp["even"] = err <= 1e-9 * scale
    else:
        hyp["even"] = False
    if not hyp["even"]:
        msgs.append("forward: f is not even on the hull")

    a = np.abs(d1)
    suffix = np.maximum.accumulate(a[::-1])[::-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(suffix > 0, suffix / a, 1.0)
    conv_c = float(np.max(ratio))
    hyp["derivative_comparable"] = bool(np.isfinite(conv_c))
    if not hyp["derivative_comparable"]:
        msgs.append("forward: |f'(x)| <= C |f'(y)| fails (f' vanishes inside)")
    if not np.isfinite(hyp_c):
        msgs.append("forward: |x f'| / phi is unbounded on the grid")

    if delta is None:
        delta = f.grid.length
        if w.x_safe > 0:
            delta = min(delta, w.x_safe * (1 - 1e-9))
    rep = weighted_bmo_norm(f - float(f.values[0]), w, delta, density)
    fwd = rep.sup_part

    near = hi / 4 if near is None else near
    sel = (x <= near) & dom
    hyp["decreasing"] = bool(np.all(d1[x <= near] <= 0))
    d2 = np.gradient(d1, x)
    tol = 1e-8 * max(float(np.max(np.abs(d2))), 1e-300)
    hyp["convex"] = bool(np.all(d2[x <= near][1:-1] >= -tol))
    if not hyp["decreasing"]:
        msgs.append("converse: f is not decreasing near 0")
    if not hyp["convex"]:
        msgs.append("converse: f is not convex near 0 (part 2 hypothesis)")
    conv_der = float(np.max(np.abs(x[sel] * d1[sel]) / w.phi(x[sel]))) if sel.any() else float("nan")

    sel4 = sel & w.in_domain(4 * x) & (4 * x <= hi)
    if sel4.any():
        psi_v = np.abs(x[sel4] * d1[sel4]) if psi is None else np.asarray(psi(x[sel4]), dtype=float)
        conv_psi = float(np.max(psi_v / w.phi(4 * x[sel4])))
    else:
        conv_psi = float("nan")
        msgs.append("converse: no nodes with 4x inside the weight domain")

    return DerivativeCheckReport(
        hypothesis_constant=hyp_c,
        forward_constant=float(fwd),
        converse_derivative_constant=conv_der,
        converse_psi_constant=conv_psi,
        convexity_constant=conv_c,
        hypotheses=hyp,
        messages=msgs,
    )
