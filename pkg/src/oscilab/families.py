"""Generators for the explicit function families.

Every generator returns a :class:`SampledFunction` whose ``meta`` records
the derived parameters, the grid units (``length_scale`` is the physical
size of one grid unit) and any construction-time checks.

Profiles are assembled as exact piecewise-linear functions on grids that
carry nodes at every corner, then rounded with :func:`mollify`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sampled import Grid1D, Interval, SampledFunction, graded_grid, integrate_abs, make_grid, mollify

__all__ = [
    "FamilySpec",
    "KINDS",
    "step_plateau",
    "tail_family",
    "gradient_bounded",
    "plateau_cascade",
    "plateau_window",
    "cascade_levels",
    "time_blowup",
    "smooth_cutoff",
]

# plateaus narrower than this (in grid units) switch the step family to
# grid units of s
SCALED_THRESHOLD = 1e-9


def _mirror(pos_nodes: np.ndarray) -> Grid1D:
    """Symmetric grid from nodes on ``[0, H]`` (0 must be the first node)."""
    pos = pos_nodes[pos_nodes > 0]
    return Grid1D(np.concatenate([-pos[::-1], [0.0], pos]), ("graded", "symmetric"))


def _symmetrize(f: SampledFunction) -> SampledFunction:
    """Copy the values at ``x >= 0`` onto the mirrored nodes (exact evenness)."""
    x = f.grid.nodes
    n_neg = int(np.sum(x < 0))
    v = f.values.copy()
    v[:n_neg] = v[n_neg + 1 :][::-1]
    return f.with_values(v)


def _corner_patches(corners, width, cells=12, reach=2.5):
    return [(c, reach * width, width / cells) for c in corners]


# --------------------------------------------------------------------------
# step plateau


def step_plateau(
    s: float,
    delta_exp: float,
    eps: float,
    C: float = 2.0,
    mollify_width: float | None = None,
    *,
    scaled: bool | None = None,
    hull: float | None = None,
    driver_cells: int = 32,
) -> SampledFunction:
    """Plateau ``s^-delta + C`` on ``[-s, s]`` with affine ramps of width ``eps``.

    Parameters
    ----------
    s, delta_exp, eps, C : float
        Plateau half-width, height exponent, ramp width and background.
    mollify_width : float, optional
        Bump radius used to round the four corners; default ``eps / 8``.
    scaled : bool, optional
        Measure ``x`` in units of ``s`` (the plateau then has half-width 1).
        Default: only when ``s`` is below ``1e-9``.
    hull : float, optional
        Half-width of the grid hull in grid units.  Defaults to 1 in
        physical units and 100 in scaled units.
    driver_cells : int
        Grid cells per plateau half-width on ``[s + eps, 10 s]``.

    Notes
    -----
    The height ``s^-delta`` is always computed from the physical ``s``;
    scaling only changes the abscissa.  ``meta["length_scale"]`` holds the
    physical size of one grid unit.
    """
    s, delta_exp, eps, C = float(s), float(delta_exp), float(eps), float(C)
    if not (s > 0 and delta_exp > 0 and eps > 0):
        raise ValueError("s, delta_exp and eps must be positive")
    if eps > s / 10 * (1 + 1e-12):
        raise ValueError("ramp width must satisfy eps <= s/10")
    if not C > 1:
        raise ValueError("background C must exceed 1")
    w = eps / 8 if mollify_width is None else float(mollify_width)
    if not 0 < w < eps / 4:
        raise ValueError("mollify_width must lie in (0, eps/4)")
    if scaled is None:
        scaled = s < SCALED_THRESHOLD
    unit = s if scaled else 1.0
    H = (100.0 if scaled else 1.0) if hull is None else float(hull)
    sg, eg, wg = s / unit, eps / unit, w / unit
    if H <= 12 * sg:
        raise ValueError("hull too small for the plateau")

    height = math.exp(-delta_exp * math.log(s))
    corners = [sg, sg + eg]
    patches = _corner_patches(corners, wg)
    lo_d = sg + eg + 3 * wg
    patches.append(((lo_d + 10 * sg) / 2, (10 * sg - lo_d) / 2, sg / driver_cells))
    pos = graded_grid(0.0, H, patches, h_max=H / 200, extra=[0.0] + corners).nodes
    grid = _mirror(pos)

    x = grid.nodes
    ax = np.abs(x)
    ramp = height * np.clip((sg + eg - ax) / eg, 0.0, 1.0)
    vals = C + np.where(ax <= sg, height, ramp)
    all_corners = [-sg - eg, -sg, sg, sg + eg]
    f = SampledFunction(grid, vals)
    f = _symmetrize(mollify(f, wg, around=all_corners))
    return f.with_values(
        f.values,
        kind="step_plateau",
        s=s, delta_exp=delta_exp, eps=eps, C=C, mollify_width=w,
        height=height,
        scaled_unit_mode=bool(scaled),
        length_scale=unit,
        log_length_scale=math.log(unit),
        log_inv_s=-math.log(s),
        corners=tuple(all_corners),
        driver_window=(sg + 2 * eg, 10 * sg),
        singular_points=(0.0,),
    )


# --------------------------------------------------------------------------
# tail family


def tail_family(
    t: float,
    ell: float,
    *,
    C: float = 0.0,
    eps_ratio: float = 0.1,
    s_floor: float = 1e-12,
) -> SampledFunction:
    """Plateau ``s^-delta`` on top of ``min(t^-ell, |x|^-ell)`` with ``s = e^(-1/t)``, ``delta = sqrt(t)``.

    When ``s`` falls below ``s_floor`` the plateau half-width is clamped to
    ``s_floor`` (``meta["clamped"]``) while the height keeps the analytic
    value ``e^(1/sqrt(t))``.  The plateau edge is an affine ramp of width
    ``eps_ratio * s``.
    """
    t, ell = float(t), float(ell)
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    if not ell > 0:
        raise ValueError("ell must be positive")
    log_inv_s = 1.0 / t
    s_analytic = math.exp(-log_inv_s)
    delta = math.sqrt(t)
    clamped = s_analytic < s_floor
    s = s_floor if clamped else s_analytic
    if not s * (1 + eps_ratio) < t / 4:
        raise ValueError("plateau does not fit inside [-t, t]; need t >> s")
    eps = eps_ratio * s
    height = math.exp(delta * log_inv_s)
    w_s = eps / 8
    w_t = t / 64
    patches = _corner_patches([s, s + eps], w_s) + _corner_patches([t], w_t)
    pos = graded_grid(0.0, 1.0, patches, h_max=1 / 256, extra=[0.0, s, s + eps, t]).nodes
    grid = _mirror(pos)
    x = grid.nodes
    ax = np.abs(x)
    base = np.where(ax <= t, t ** -ell, np.power(np.maximum(ax, t), -ell))
    ramp = height * np.clip((s + eps - ax) / eps, 0.0, 1.0)
    vals = C + base + np.where(ax <= s, height, ramp)
    f = SampledFunction(grid, vals)
    f = mollify(f, w_s, around=[-s - eps, -s, s, s + eps])
    f = _symmetrize(mollify(f, w_t, around=[-t, t]))

    far = (ax >= s + eps + w_s) & (ax < 1)
    with np.errstate(divide="ignore"):
        lower = float(np.min(np.log(f.values[far]) / np.log(1 / ax[far]))) if far.any() else float("nan")
    return f.with_values(
        f.values,
        kind="tail",
        t=t, ell=ell, C=C,
        s=s, s_analytic=s_analytic, log_inv_s=log_inv_s, delta_exp=delta,
        eps=eps, height=height, clamped=bool(clamped),
        dominance_ratio=t ** ell * math.exp(1 / math.sqrt(t)),
        lower_exponent=lower,
        driver_window=(s + 2 * eps, min(10 * s, t / 2)),
        length_scale=1.0,
        singular_points=(0.0,),
    )


# --------------------------------------------------------------------------
# gradient-bounded family


def gradient_bounded(s: float, delta_exp: float, ell: float, C: float = 2.0) -> SampledFunction:
    """Plateau ``s^-delta`` with the shoulder ``s^-delta - s^(1-ell) + |x|^(1-ell)`` on ``(s, b]``.

    ``b`` solves ``s^-delta - s^-ell + b^-ell = 0``.  The shoulder value at
    ``b`` is not zero, so the profile drops to ``C`` over an affine ramp of
    width ``jump * s^ell`` (slope ``s^-ell``), keeping ``|f'| <~ |x|^-ell``.

    ``meta`` reports ``b``, the root residual, ``(b - s)/s``, the jump at
    ``b``, the same quantity under the alternative shoulder exponent
    ``-ell`` (which vanishes), ``max |f'| |x|^ell`` and the L1 norm.
    """
    s, delta_exp, ell, C = float(s), float(delta_exp), float(ell), float(C)
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    if not ell > 1:
        raise ValueError("ell must exceed 1")
    if not delta_exp > 0:
        raise ValueError("delta_exp must be positive")
    sl, sd = s ** -ell, s ** -delta_exp
    if not sl > sd:
        raise ValueError("no root b: need s^-ell > s^-delta")
    b = (sl - sd) ** (-1 / ell)
    residual = (sd - sl + b ** -ell) / sl
    jump = sd - s ** (1 - ell) + b ** (1 - ell)
    alt_jump = sd - sl + b ** -ell
    w_r = max(jump, 0.0) * s ** ell
    if not w_r > 0:
        raise ValueError("degenerate shoulder (no drop at b)")
    e = b + w_r
    w_m = w_r / 8
    patches = _corner_patches([s, b, e], w_m)
    pos = graded_grid(0.0, 1.0, patches, h_max=1 / 256, extra=[0.0, s, b, e]).nodes
    grid = _mirror(pos)
    x = grid.nodes
    ax = np.abs(x)
    shoulder = sd - s ** (1 - ell) + np.power(np.maximum(ax, s), 1 - ell)
    drop = jump * np.clip((e - ax) / w_r, 0.0, 1.0)
    vals = C + np.where(ax <= s, sd, np.where(ax <= b, shoulder, drop))
    f = SampledFunction(grid, vals)
    f = _symmetrize(mollify(f, w_m, around=[-e, -b, -s, s, b, e]))

    pos_n = x > 0
    grad = np.abs(np.gradient(f.values[pos_n], x[pos_n]))
    grad_const = float(np.max(grad * x[pos_n] ** ell))
    l1 = integrate_abs(f, Interval(-1.0, 1.0))
    return f.with_values(
        f.values,
        kind="gradient_bounded",
        s=s, delta_exp=delta_exp, ell=ell, C=C,
        b=b, b_residual=residual, b_gap_ratio=(b - s) / s,
        jump_at_b=jump, alt_jump_at_b=alt_jump, ramp_width=w_r,
        gradient_constant=grad_const, l1_norm=l1,
        driver_window=(e + 2 * w_r, 10 * s),
        length_scale=1.0,
        singular_points=(0.0,),
    )


# --------------------------------------------------------------------------
# plateau cascade


def cascade_levels(N: int, gamma_seq) -> list[dict]:
    """``a_i = 2^(-2^i)``, ``|I_i| = a_i^gamma_i`` for ``i = 1..N`` (log2 form kept exact)."""
    gam = [float(g) for g in gamma_seq]
    if len(gam) < N:
        raise ValueError("gamma_seq shorter than N")
    out = []
    for i in range(1, N + 1):
        log2_a = -(2.0 ** i)
        g = gam[i - 1]
        out.append({
            "i": i,
            "gamma": g,
            "log2_a": log2_a,
            "a": 2.0 ** log2_a,
            "log2_width": g * log2_a,
            "width": 2.0 ** (g * log2_a),
        })
    return out


def _check_cascade(alpha, beta, gamma_seq, N):
    if not 0 < alpha < beta:
        raise ValueError("need 0 < alpha < beta")
    if N < 1:
        raise ValueError("N must be at least 1")
    gam = [float(g) for g in gamma_seq[:N]]
    if any(g2 < g1 for g1, g2 in zip(gam, gam[1:])):
        raise ValueError("gamma_seq must be nondecreasing")
    if any(g <= 1 for g in gam):
        raise ValueError("gamma_i must exceed 1 so that |I_i| << a_i")
    return len(set(gam)) == 1 and N > 1


def plateau_cascade(
    alpha: float, beta: float, gamma_seq, N: int, *, ramp: float = 0.02, cells: int = 64
) -> SampledFunction:
    """``x^-alpha`` background with plateaus ``a_i^-beta`` on ``I_i = [a_i, a_i + a_i^gamma_i]``.

    Built on ``[a_{N+1}, 1]``.  Each plateau is joined to the background by
    affine ramps of width ``ramp * |I_i|`` and rounded.  Levels whose width
    cannot be resolved relative to ``a_i`` in double precision raise; use
    :func:`plateau_window` for those.
    """
    degenerate = _check_cascade(alpha, beta, gamma_seq, N)
    lv = cascade_levels(N, gamma_seq)
    for L in lv:
        if L["width"] * ramp / cells < 64 * L["a"] * np.finfo(float).eps:
            raise ValueError(f"level {L['i']} plateau too narrow for the grid; use plateau_window")
    separation = []
    for L, M in zip(lv, lv[1:]):
        gap = L["a"] - (M["a"] + M["width"])
        if not L["width"] < 0.5 * gap:
            raise ValueError(f"plateaus {L['i']} and {M['i']} overlap or are not separated")
        separation.append(L["width"] / gap)
    x_lo = 2.0 ** -(2.0 ** (N + 1))
    patches = []
    extra = [x_lo, 1.0]
    corners = []
    for L in lv:
        a, wd = L["a"], L["width"]
        r = ramp * wd
        cs = [a - r, a, a + wd, a + wd + r]
        corners += cs
        extra += cs
        patches += _corner_patches(cs, r / 4, cells=8)
        patches.append((a + wd / 2, wd / 2 - r, wd / cells))
    nodes = graded_grid(x_lo, 1.0, patches, growth=1.05, h_max=1 / 256, extra=extra).nodes
    grid = Grid1D(nodes, ("graded",))
    x = nodes
    vals = x ** -alpha
    for L in lv:
        a, wd = L["a"], L["width"]
        r = ramp * wd
        top = a ** -beta
        up = np.clip((x - (a - r)) / r, 0, 1)
        down = np.clip((a + wd + r - x) / r, 0, 1)
        weight = np.minimum(up, down)
        vals = np.where(weight > 0, (1 - weight) * vals + weight * top, vals)
    f = SampledFunction(grid, vals)
    w_m = min(ramp * L["width"] for L in lv) / 8
    f = mollify(f, w_m, around=corners)
    return f.with_values(
        f.values,
        kind="plateau_cascade",
        alpha=alpha, beta=beta, gamma=tuple(float(g) for g in gamma_seq[:N]), N=N,
        levels=tuple((L["i"], L["a"], L["width"]) for L in lv),
        separation=tuple(separation),
        degenerate_control=degenerate,
        length_scale=1.0,
        singular_points=(0.0,),
    )


def plateau_window(
    alpha: float,
    beta: float,
    gamma_seq,
    i: int,
    *,
    half_width: float = 4.0,
    ramp: float = 0.02,
    cells: int = 64,
) -> SampledFunction:
    """Plateau ``i`` of the cascade on a local window in units of ``|I_i|``.

    Grid coordinate ``xi = (x - a_i) / |I_i|``; the window is
    ``[-half_width, 1 + half_width]``, cut at ``x = a_i / 2`` on the left.
    The background is evaluated as
    ``a_i^-alpha (1 + xi |I_i|/a_i)^-alpha`` through ``log1p`` so it stays
    accurate when ``|I_i|`` is far below the resolution of ``a_i``.
    ``meta["log_length_scale"]`` is ``ln |I_i|``, usable when ``|I_i|``
    itself underflows.
    """
    degenerate = _check_cascade(alpha, beta, gamma_seq, i)
    L = cascade_levels(i, gamma_seq)[-1]
    log_a = L["log2_a"] * math.log(2.0)
    log_w = L["log2_width"] * math.log(2.0)
    rel = math.exp(log_w - log_a)
    r = ramp
    cs = [-r, 0.0, 1.0, 1.0 + r]
    patches = _corner_patches(cs, r / 4, cells=8)
    patches.append((0.5, 0.5 - r, 1.0 / cells))
    left = min(half_width, 0.5 / rel)  # keep x >= a_i / 2
    nodes = graded_grid(-left, 1.0 + half_width, patches, h_max=1.0 / cells, extra=cs).nodes
    xi = nodes
    bg = np.exp(-alpha * (log_a + np.log1p(xi * rel)))
    top = math.exp(-beta * log_a)
    up = np.clip((xi + r) / r, 0, 1)
    down = np.clip((1.0 + r - xi) / r, 0, 1)
    weight = np.minimum(up, down)
    vals = (1 - weight) * bg + weight * top
    f = SampledFunction(Grid1D(nodes, ("graded",)), vals)
    f = mollify(f, r / 8, around=cs)
    return f.with_values(
        f.values,
        kind="plateau_window",
        alpha=alpha, beta=beta, gamma=L["gamma"], level=i,
        a=L["a"], log_a=log_a,
        length_scale=math.exp(log_w), log_length_scale=log_w,
        degenerate_control=degenerate,
        driver_window=(-1.0, -2 * r),
        scaled_unit_mode=True,
    )


# --------------------------------------------------------------------------
# time blow-up profile


def smooth_cutoff(x):
    """C-infinity cutoff: 1 on ``|x| <= 1/2``, 0 on ``|x| >= 1``."""
    u = np.clip(2.0 * (1.0 - np.abs(np.asarray(x, dtype=float))), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        p = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
        q = np.where(u < 1, np.exp(-1.0 / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    return p / (p + q)


def time_blowup(
    eps1: float,
    eps2: float,
    T: float,
    t: float,
    *,
    amplitude: float = 1.0,
    n: int = 1024,
    floor: float | None = None,
    extra=(),
) -> SampledFunction:
    """``amplitude / (|x|^eps1 + (T - t)^eps2)`` times a smooth cutoff on ``[-1, 1]``.

    The grid is geometric toward 0 with smallest distance ``floor``
    (default ``1e-3 (T - t)^(eps2/eps1)``, the core radius scaled down,
    capped at ``1e-6``).  ``extra`` points are added as nodes together
    with their mirror images.
    """
    eps1, eps2, T, t = float(eps1), float(eps2), float(T), float(t)
    if not (eps1 > 0 and eps2 > 0):
        raise ValueError("eps1 and eps2 must be positive")
    if not t < T:
        raise ValueError("need t < T")
    tau = T - t
    core = tau ** (eps2 / eps1)
    floor = min(1e-6, 1e-3 * core) if floor is None else float(floor)
    grid = make_grid(-1.0, 1.0, n, ("geometric", 0.0), floor=floor)
    if len(extra):
        e = np.abs(np.asarray(extra, dtype=float))
        e = e[(e > 0) & (e < 1)]
        grid = Grid1D(np.unique(np.concatenate([grid.nodes, e, -e])), grid.grading)
    x = grid.nodes
    vals = amplitude / (np.abs(x) ** eps1 + tau ** eps2) * smooth_cutoff(x)
    f = _symmetrize(SampledFunction(grid, vals))
    return f.with_values(
        f.values,
        kind="time_blowup",
        eps1=eps1, eps2=eps2, T=T, t=t, tau=tau, amplitude=amplitude,
        ell1=eps1 + 1, ell2=eps2 * (1 + 1 / eps1),
        length_scale=1.0,
        singular_points=(0.0,),
    )


# --------------------------------------------------------------------------
# family records


KINDS = {
    "step_plateau": step_plateau,
    "tail": tail_family,
    "gradient_bounded": gradient_bounded,
    "plateau_cascade": plateau_cascade,
    "plateau_window": plateau_window,
    "time_blowup": time_blowup,
}


@dataclass(frozen=True)
class FamilySpec:
    """A family kind plus its parameters, buildable and JSON-friendly."""

    kind: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}; choose from {sorted(KINDS)}")

    def build(self) -> SampledFunction:
        return KINDS[self.kind](**self.parameters)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "parameters": dict(self.parameters)}

    @classmethod
    def from_dict(cls, d: dict) -> "FamilySpec":
        return cls(d["kind"], dict(d.get("parameters", {})))
