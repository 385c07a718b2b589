"""Experiment runners, configuration and result persistence.

Each experiment takes an :class:`ExperimentConfig`, evaluates independent
sweep points (concurrently when ``OSCILAB_THREADS`` > 1), sorts the rows by
the sweep key and derives pass/fail verdicts.  Results serialize to CSV
(rows) and JSON (verdicts and summary); neither contains timings, so
reruns are byte-identical.
"""

from __future__ import annotations

import copy
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .families import FamilySpec, gradient_bounded, plateau_window, step_plateau, tail_family, time_blowup
from .maximal import MaximalOptions, gradient_decay_estimate, maximal_function
from .oscillation import derivative_oscillation_check, multiplier_inequality_ratio, weighted_bmo_norm
from .sampled import Grid1D, SampledFunction, make_grid
from .weights import LogWeight, phi_log, phi_star

__all__ = [
    "ExperimentConfig",
    "SweepResult",
    "DriverResult",
    "EXPERIMENTS",
    "default_config",
    "driver_statistic",
    "run_experiment",
    "run_blowup_sweep",
    "run_coifman_rochberg_contrast",
    "run_uniform_bound_check",
    "run_multiplier_check",
    "run_lemma_checks",
    "thread_count",
]


def thread_count() -> int:
    """Worker cap from ``OSCILAB_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("OSCILAB_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    n = thread_count()
    if n > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=n) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment run; JSON keys mirror the field names.

    ``bmo["delta"]`` is measured in grid units of the family (in scaled-unit
    mode one unit is the plateau half-width).  ``outputs`` does not enter
    the config hash.
    """

    experiment: str
    weight_k: int = 1
    family: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    maximal: dict = field(default_factory=dict)
    bmo: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if int(self.weight_k) != self.weight_k or self.weight_k < 0:
            raise ValueError("weight_k must be a nonnegative integer")
        vals = self.sweep.get("values")
        if vals is not None and len(vals) == 0:
            raise ValueError("sweep values must be nonempty")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields {sorted(extra)}")
        return cls(**copy.deepcopy(d))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        exp = raw.get("experiment")
        if exp not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {exp!r}")
        return cls.from_dict(_merge(default_config(exp).to_dict(), raw))

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("outputs", None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def mopts(self, **over) -> MaximalOptions:
        return MaximalOptions(**{**self.maximal, **over})


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


# --------------------------------------------------------------------------
# results


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


@dataclass
class SweepResult:
    """Rows (one per sweep point, sorted by ``key``) plus verdicts."""

    experiment: str
    config_hash: str
    key: str
    rows: list
    verdicts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    @property
    def columns(self) -> list:
        cols = []
        for r in self.rows:
            for c in r:
                if c not in cols:
                    cols.append(c)
        return cols + ["config_hash"]

    def column(self, name) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.rows], dtype=float)

    def to_csv(self, path=None) -> str:
        cols = self.columns
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for r in self.rows:
            vals = [_fmt(r.get(c)) for c in cols[:-1]] + [self.config_hash]
            buf.write(",".join(vals) + "\n")
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, path=None) -> str:
        doc = {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "passed": self.passed,
            "verdicts": self.verdicts,
            "summary": self.summary,
        }
        text = json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text)
        return text

    def write(self, out_dir) -> tuple:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.experiment}.csv"
        json_path = out / f"{self.experiment}.json"
        self.to_csv(csv_path)
        self.to_json(json_path)
        return csv_path, json_path


def _verdict(name, value, threshold, passed, detail=""):
    return {"name": name, "value": value, "threshold": threshold, "passed": bool(passed), "detail": detail}


# --------------------------------------------------------------------------
# driver statistic


@dataclass(frozen=True)
class DriverResult:
    value: float
    a: float
    b: float
    found: bool
    nodes: int
    sign: int


def driver_statistic(h: SampledFunction, window, w: LogWeight, *, log_length_scale: float = 0.0) -> DriverResult:
    """``|I| inf_I |h'| / phi(|I|^-1)`` on the widest monotone convex node run.

    The run is the longest (in length) stretch of consecutive nodes inside
    the open ``window`` where the finite-difference ``h'`` keeps one
    nonzero sign and ``h''`` is positive.  ``|I|`` in the weight is the
    physical length ``exp(ln |I| + log_length_scale)``; it is passed
    through ``|ln|`` so it never underflows.
    """
    x, y = h.grid.nodes, h.values
    d1 = np.gradient(y, x)
    d2 = np.gradient(d1, x)
    lo, hi = window
    idx = np.flatnonzero((x > lo) & (x < hi))
    best = None
    start = None
    for pos in range(idx.size + 1):
        i = idx[pos] if pos < idx.size else None
        good = i is not None and d2[i] > 0 and d1[i] != 0
        if good and start is not None:
            s0 = idx[start]
            good = np.sign(d1[i]) == np.sign(d1[s0]) and i == idx[pos - 1] + 1
            if not good:
                # close the current run and possibly start a new one here
                best = _better(best, x, idx, start, pos - 1)
                start = pos if (d2[i] > 0 and d1[i] != 0) else None
                continue
        if good and start is None:
            start = pos
        elif not good and start is not None:
            best = _better(best, x, idx, start, pos - 1)
            start = None
    if best is None or best[1] - best[0] < 2:
        return DriverResult(float("nan"), float("nan"), float("nan"), False, 0, 0)
    j0, j1 = idx[best[0]], idx[best[1]]
    width = x[j1] - x[j0]
    inf_d = float(np.min(np.abs(d1[j0 : j1 + 1])))
    u = abs(math.log(width) + log_length_scale)
    value = width * inf_d / float(phi_log(w, u))
    return DriverResult(value, float(x[j0]), float(x[j1]), True, int(j1 - j0 + 1), int(np.sign(d1[j0])))


def _better(best, x, idx, s, e):
    if e - s < 1:
        return best
    if best is None or x[idx[e]] - x[idx[s]] > x[idx[best[1]]] - x[idx[best[0]]]:
        return (s, e)
    return best


def _log_scale(f: SampledFunction) -> float:
    if "log_length_scale" in f.meta:
        return float(f.meta["log_length_scale"])
    return math.log(float(f.meta.get("length_scale", 1.0)))


# --------------------------------------------------------------------------
# blow-up sweeps


_SWEEP_EXPECT = {
    "step_plateau": ("delta_exp", lambda f: 1.0 / f.meta["delta_exp"]),
    "tail": ("t", lambda f: 1.0 / f.meta["delta_exp"]),
    "gradient_bounded": ("delta_exp", lambda f: 1.0 / f.meta["delta_exp"]),
    "plateau_window": ("level", lambda f: f.meta["gamma"] / f.meta["beta"]),
}


def _build_point(kind: str, params: dict, name: str, value):
    p = dict(params)
    if kind == "step_plateau":
        log_inv_s = float(p.pop("log_inv_s", 100.0))
        eps_ratio = float(p.pop("eps_ratio", 0.01))
        s = math.exp(-log_inv_s)
        p[name] = value
        return step_plateau(s=s, eps=eps_ratio * s, **p)
    if kind == "tail":
        p[name] = value
        return tail_family(**p)
    if kind == "gradient_bounded":
        p[name] = value
        return gradient_bounded(**p)
    if kind == "plateau_window":
        return plateau_window(p["alpha"], p["beta"], p["gamma_seq"], int(value),
                              **{k: v for k, v in p.items() if k not in ("alpha", "beta", "gamma_seq")})
    raise ValueError(f"family kind {kind!r} has no blow-up sweep")


def _evaluate_point(f: SampledFunction, ks, cfg: ExperimentConfig) -> dict:
    Mf = maximal_function(f, cfg.mopts())
    delta = float(cfg.bmo.get("delta", 20.0))
    density = int(cfg.bmo.get("density", 8))
    scale = float(f.meta.get("length_scale", 1.0))
    log_scale = _log_scale(f)
    out = {}
    for k in ks:
        w = LogWeight(k)
        h = Mf.with_values(phi_star(w, Mf.values))
        drv = driver_statistic(h, f.meta["driver_window"], w, log_length_scale=log_scale)
        rep = weighted_bmo_norm(h, w, delta, density, length_scale=scale)
        out[k] = {
            "driver": drv.value,
            "driver_a": drv.a,
            "driver_b": drv.b,
            "monotone_convex": drv.found,
            "sup_part": rep.sup_part,
            "l1_part": rep.l1_part,
            "argmax_a": rep.argmax_interval.a,
            "argmax_b": rep.argmax_interval.b,
        }
    return out


def _sweep(cfg: ExperimentConfig, ks):
    kind = cfg.family.get("kind", "step_plateau")
    params = cfg.family.get("parameters", {})
    name = cfg.sweep.get("parameter", _SWEEP_EXPECT[kind][0])
    values = list(cfg.sweep["values"])
    expect = _SWEEP_EXPECT[kind][1]

    def job(v):
        f = _build_point(kind, params, name, v)
        res = _evaluate_point(f, ks, cfg)
        return v, expect(f), f.meta.get("scaled_unit_mode", False), res

    done = _pmap(job, values)
    done.sort(key=lambda r: _sort_key(name, r[0]))
    return kind, name, done


def _sort_key(name, v):
    # rows ordered so that the blow-up parameter grows down the table
    return -v if name in ("delta_exp", "t") else v


def _trend_verdicts(rows, k, expect_mode, kind, growth_min=None):
    drv = np.array([r["driver"] for r in rows])
    exp_v = np.array([r["expected"] for r in rows])
    sup = np.array([r["sup_part"] for r in rows])
    out = []
    found = all(r["monotone_convex"] for r in rows)
    out.append(_verdict(f"k={k} driver interval found at every point", found, True, found))
    if expect_mode == "flat":
        ratio = float(np.nanmax(drv) / np.nanmin(drv)) if found else float("nan")
        out.append(_verdict(f"k={k} driver flat (max/min)", ratio, 1 + 1e-9, ratio <= 1 + 1e-9))
        return out
    mono = bool(found and np.all(np.diff(drv) > 0))
    out.append(_verdict(f"k={k} driver increasing along sweep", mono, True, mono))
    ratio = drv / exp_v
    lo, hi = float(np.nanmin(ratio)), float(np.nanmax(ratio))
    ok = bool(found and lo >= 0.25 and hi <= 4.0)
    out.append(_verdict(f"k={k} driver / expected within [1/4, 4]", [lo, hi], [0.25, 4.0], ok))
    if growth_min is not None:
        growth = float(sup[-1] / sup[0])
        out.append(_verdict(f"k={k} sup part growth first->last", growth, growth_min, growth >= growth_min))
    elif kind != "plateau_window":
        inc = bool(np.all(np.diff(sup) > 0))
        out.append(_verdict(f"k={k} sup part increasing along sweep", inc, True, inc))
    coh = [r["sup_part"] / r["driver"] for r in rows if r["monotone_convex"] and r["driver"] > 0]
    c = float(min(coh)) if coh else float("nan")
    out.append(_verdict(f"k={k} driver-vs-norm coherence constant", c, 0.0, bool(coh) and c > 0))
    return out


def run_blowup_sweep(cfg: ExperimentConfig) -> SweepResult:
    """Driver statistic and direct bmo norm of ``phi_star(M f)`` along a sweep."""
    t0 = time.perf_counter()
    k = int(cfg.weight_k)
    kind, name, done = _sweep(cfg, [k])
    rows = []
    for v, expected, scaled, res in done:
        r = {name: v, "expected": expected, "k": k, "scaled_unit_mode": scaled}
        r.update(res[k])
        r["driver_ratio"] = r["driver"] / expected
        rows.append(r)
    mode = cfg.options.get("expect", "growth")
    verdicts = _trend_verdicts(rows, k, mode, kind, cfg.options.get("sup_growth_min"))
    summary = {"family": kind, "parameter": name, "weight_k": k}
    return SweepResult(cfg.experiment, cfg.config_hash(), name, rows, verdicts, summary,
                       time.perf_counter() - t0)


def run_coifman_rochberg_contrast(cfg: ExperimentConfig) -> SweepResult:
    """Same sweep with ``k = 0``; the sup part must stay bounded.

    The weight from the config (``k >= 1``) is rerun on the same maximal
    functions for contrast.
    """
    t0 = time.perf_counter()
    k = int(cfg.weight_k)
    ks = [0] if k == 0 else [0, k]
    kind, name, done = _sweep(cfg, ks)
    rows = []
    for v, expected, scaled, res in done:
        for kk in ks:
            r = {name: v, "expected": expected, "k": kk, "scaled_unit_mode": scaled}
            r.update(res[kk])
            rows.append(r)
    sup0 = np.array([r["sup_part"] for r in rows if r["k"] == 0])
    ratio0 = float(sup0.max() / sup0.min()) if sup0.min() > 0 else (1.0 if sup0.max() == 0 else float("inf"))
    verdicts = [_verdict("k=0 sup part max/min", ratio0, 2.0, ratio0 <= 2.0)]
    summary = {"family": kind, "parameter": name, "k0_ratio": ratio0}
    if k > 0:
        supk = np.array([r["sup_part"] for r in rows if r["k"] == k])
        growth = float(supk[-1] / supk[0])
        verdicts.append(_verdict(f"k={k} sup part growth first->last", growth, 3.0, growth >= 3.0))
        summary["k_growth"] = growth
    return SweepResult(cfg.experiment, cfg.config_hash(), name, rows, verdicts, summary,
                       time.perf_counter() - t0)


# --------------------------------------------------------------------------
# uniform-in-time bound


def run_uniform_bound_check(cfg: ExperimentConfig) -> SweepResult:
    """``||phi_star(M_r f_t)||_bmo_phi`` along a ladder of ``T - t``.

    Rows cover every ``r`` in ``sweep["r_values"]`` and both the configured
    depth and ``k = 0``.  The verdict uses the configured depth and
    ``maximal["r"]``; everything else is context.  The integrability proxy
    ``r * eps1 < 1`` (``|f|^r`` locally integrable in one dimension) is
    reported per ``r``.
    """
    t0 = time.perf_counter()
    k = int(cfg.weight_k)
    p = dict(cfg.family.get("parameters", {}))
    T = float(p.pop("T", 1.0))
    ladder = [float(v) for v in cfg.sweep.get("values", [10.0 ** -j for j in range(1, 7)])]
    if any(not 0 < tau < T for tau in ladder):
        raise ValueError("time ladder must lie in (0, T)")
    r_main = float(cfg.maximal.get("r", 0.5))
    r_values = sorted(set([r_main] + [float(r) for r in cfg.sweep.get("r_values", [])]))
    ks = sorted(set([k, 0]))
    delta = float(cfg.bmo.get("delta", 0.05))
    density = int(cfg.bmo.get("density", 8))

    jobs = [(tau, r) for tau in ladder for r in r_values]

    def job(item):
        tau, r = item
        f = time_blowup(T=T, t=T - tau, **p)
        Mf = maximal_function(f, cfg.mopts(r=r))
        res = []
        for kk in ks:
            w = LogWeight(kk)
            h = Mf.with_values(phi_star(w, Mf.values))
            rep = weighted_bmo_norm(h, w, delta, density)
            res.append({"tau": tau, "r": r, "k": kk, "norm": rep.norm_value,
                        "sup_part": rep.sup_part, "l1_part": rep.l1_part,
                        "min_Mf": float(Mf.values.min()),
                        "integrable_proxy": r * f.meta["eps1"] < 1})
        return res

    rows = [row for part in _pmap(job, jobs) for row in part]
    rows.sort(key=lambda r: (r["k"], r["r"], -r["tau"]))
    verdicts = []
    summary = {}
    for kk in ks:
        for r in r_values:
            norms = np.array([x["norm"] for x in rows if x["k"] == kk and x["r"] == r])
            ratio = float(norms.max() / norms.min())
            summary[f"k={kk},r={r}"] = {"sup": float(norms.max()), "max_min_ratio": ratio}
            if kk == k and r == r_main:
                verdicts.append(_verdict(f"k={kk} r={r} norm max/min across ladder", ratio, 2.0, ratio <= 2.0))
    return SweepResult(cfg.experiment, cfg.config_hash(), "tau", rows, verdicts, summary,
                       time.perf_counter() - t0)


# --------------------------------------------------------------------------
# multiplier corpus


def _random_pl(rng, grid: Grid1D, knots: int, lo: float, hi: float) -> np.ndarray:
    a, b = grid.hull
    kx = np.sort(np.concatenate([[a, b], rng.uniform(a, b, knots)]))
    ky = rng.uniform(lo, hi, kx.size)
    return np.interp(grid.nodes, kx, ky)


def _corpus(seed: int, n_pairs: int, grid: Grid1D):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_pairs):
        f = _random_pl(rng, grid, int(rng.integers(4, 17)), -2.0, 2.0)
        if rng.uniform() < 0.5:
            # add a steep plateau of moderate height
            c, half = rng.uniform(-0.5, 0.5) * grid.length / 2, rng.uniform(0.02, 0.2) * grid.length
            f = f + rng.uniform(1, 4) * np.clip((half - np.abs(grid.nodes - c)) / (0.1 * half), 0, 1)
        g = _random_pl(rng, grid, int(rng.integers(4, 17)), -1.0, 1.0)
        out.append((SampledFunction(grid, f), SampledFunction(grid, g)))
    return out


def run_multiplier_check(cfg: ExperimentConfig) -> SweepResult:
    """Distribution of the multiplier ratio over a seeded corpus and its doubling."""
    t0 = time.perf_counter()
    w = LogWeight(int(cfg.weight_k))
    n_pairs = int(cfg.options.get("pairs", 50))
    half = float(cfg.options.get("hull", 1.0 / 16))
    nodes = int(cfg.options.get("nodes", 2049))
    delta = float(cfg.bmo.get("delta", 1e-3))
    density = int(cfg.bmo.get("density", 8))
    grid = make_grid(-half, half, nodes)
    pairs = _corpus(int(cfg.seed), 2 * n_pairs, grid)

    def job(i):
        f, g = pairs[i]
        try:
            return i, multiplier_inequality_ratio(f, g, w, delta, density), ""
        except ValueError as exc:
            return i, float("nan"), str(exc)

    res = sorted(_pmap(job, list(range(2 * n_pairs))))
    rows = [{"pair": i, "in_base_corpus": i < n_pairs, "ratio": r, "skipped": msg} for i, r, msg in res]
    ratios = np.array([r for _, r, _ in res])
    skipped = int(np.sum(~np.isfinite(ratios)))
    base = ratios[:n_pairs][np.isfinite(ratios[:n_pairs])]
    full = ratios[np.isfinite(ratios)]
    m1, m2 = float(base.max()), float(full.max())
    change = abs(m2 - m1) / m1

    f0, g0 = pairs[0]
    r0 = multiplier_inequality_ratio(f0, g0, w, delta, density)
    homo = []
    for fs, gs in ((10.0, 1.0), (1.0, 3.7), (1.0, -0.25)):
        r = multiplier_inequality_ratio(f0 * fs, g0 * gs, w, delta, density)
        homo.append(abs(r - r0) / r0)
    one = SampledFunction(grid, np.ones(len(grid)))
    const_ratio = multiplier_inequality_ratio(one, one * 3.0, w, delta, density)

    verdicts = [
        _verdict("max ratio finite", m1, None, math.isfinite(m1)),
        _verdict("max ratio change on doubling", change, 0.5, change < 0.5),
        _verdict("homogeneity relative deviation", max(homo), 1e-12, max(homo) <= 1e-12),
        _verdict("constants give ratio 1", const_ratio, 1.0, abs(const_ratio - 1) <= 1e-12),
    ]
    summary = {"empirical_constant": m1, "doubled_max": m2, "skipped": skipped,
               "median_ratio": float(np.median(base)), "weight_reading": "reciprocal 1/phi_star"}
    return SweepResult(cfg.experiment, cfg.config_hash(), "pair", rows, verdicts, summary,
                       time.perf_counter() - t0)


# --------------------------------------------------------------------------
# derivative and oscillation checks


def _designated(name: str, n: int, floor: float = 1e-12) -> tuple[SampledFunction, LogWeight]:
    """Analytic test functions with known derivatives."""
    if name == "log":
        w = LogWeight(0)
        g = make_grid(-1.0, 1.0, n, ("geometric", 0.0), floor=floor, include_center=False)
        return SampledFunction(g, np.log(1 / np.abs(g.nodes))), w
    if name == "power":
        w = LogWeight(0)
        g = make_grid(-1.0, 1.0, n, ("geometric", 0.0), floor=floor, include_center=False)
        return SampledFunction(g, np.abs(g.nodes) ** -0.5), w
    if name.startswith("iterlog"):
        k = int(name[-1])
        w = LogWeight(k)
        half = w.x_safe / 2
        g = make_grid(-half, half, n, ("geometric", 0.0), floor=half * 1e-20, include_center=False)
        return SampledFunction(g, phi_star(w, np.abs(g.nodes))), w
    if name == "constant":
        w = LogWeight(1)
        g = make_grid(-0.03, 0.03, n)
        return SampledFunction(g, np.full(n, 3.0)), w
    raise ValueError(name)


def run_lemma_checks(cfg: ExperimentConfig) -> SweepResult:
    """Derivative/oscillation checks in both directions and gradient-decay fits."""
    t0 = time.perf_counter()
    n = int(cfg.options.get("nodes", 512))
    density = int(cfg.bmo.get("density", 8))
    names = list(cfg.options.get("functions", ["log", "iterlog1", "iterlog2", "power", "constant"]))
    forward_max = float(cfg.options.get("forward_max", 4.0))
    # constants at rounding level count as zero (the f = const case)
    zero_tol = float(cfg.options.get("zero_tol", 1e-12))

    def job(name):
        out = []
        for nn in (n, 2 * n):
            if name == "power":
                # refinement toward the singularity: same cells per decade, 4 more decades
                f, w = _designated(name, nn, floor=1e-8 if nn == n else 1e-12)
            else:
                f, w = _designated(name, nn)
            out.append(derivative_oscillation_check(f, w, density=density))
        return name, out

    rows, verdicts = [], []
    for name, (r1, r2) in sorted(_pmap(job, names)):
        for nn, rep in ((n, r1), (2 * n, r2)):
            rows.append({"function": name, "nodes": nn, **{
                k: v for k, v in rep.to_dict().items() if k not in ("hypotheses", "messages")
            }, "hypotheses_ok": all(rep.hypotheses.values())})
        if name == "power":
            # negative control: |x f'| is unbounded, refinement must expose it
            grow = r2.converse_derivative_constant / r1.converse_derivative_constant
            verdicts.append(_verdict("power: converse constant grows as the grid reaches 0", grow, 10.0, grow > 10.0))
            continue
        if name != "constant":
            verdicts.append(_verdict(f"{name}: forward constant", r2.forward_constant, forward_max,
                                     r2.forward_constant <= forward_max))
        for attr in ("converse_derivative_constant", "converse_psi_constant"):
            a, b = getattr(r1, attr), getattr(r2, attr)
            if abs(a) <= zero_tol and abs(b) <= zero_tol:
                change = 0.0
            else:
                change = abs(b - a) / abs(a) if a else float("inf")
            verdicts.append(_verdict(f"{name}: {attr} change under 2x refinement", change, 0.25,
                                     math.isfinite(b) and change < 0.25))

    # gradient decay: a radial decreasing profile and the time-blow-up family
    g = make_grid(-1.0, 1.0, 1024, ("geometric", 0.0), floor=1e-9)
    radial = SampledFunction(g, 1 + np.abs(np.where(g.nodes == 0, 1e-9, g.nodes)) ** -0.5)
    fit = gradient_decay_estimate([radial], MaximalOptions(r=1.0))
    verdicts.append(_verdict("radial profile gradient slope", fit.slope, -0.8, fit.slope <= -0.8))
    rows.append({"function": "gradient:1+|x|^-1/2", "nodes": len(g), "slope": fit.slope,
                 "slope_half_width": fit.half_width})
    fam = [time_blowup(0.5, 0.5, 1.0, 1.0 - tau, amplitude=16.0, n=1024) for tau in (1e-1, 1e-2, 1e-3)]
    fit2 = gradient_decay_estimate(fam, MaximalOptions(r=0.5))
    ok = math.isfinite(fit2.slope) and not fit2.degenerate
    verdicts.append(_verdict("time-blowup sup-over-t gradient slope finite", fit2.slope, None, ok))
    rows.append({"function": "gradient:time_blowup", "nodes": len(fam[0]), "slope": fit2.slope,
                 "slope_half_width": fit2.half_width})
    const = [SampledFunction(g, np.full(len(g), 2.0))]
    fit3 = gradient_decay_estimate(const)
    verdicts.append(_verdict("constant family reported degenerate", fit3.degenerate, True, fit3.degenerate))
    return SweepResult(cfg.experiment, cfg.config_hash(), "function", rows, verdicts, {},
                       time.perf_counter() - t0)


# --------------------------------------------------------------------------
# registry


def _step_defaults(k):
    return {
        "weight_k": k,
        "family": {"kind": "step_plateau", "parameters": {"log_inv_s": 100.0, "eps_ratio": 0.01, "C": 2.0}},
        "sweep": {"parameter": "delta_exp", "values": [1.0 / n for n in range(2, 9)]},
        "maximal": {"r": 1.0, "algorithm": "fast"},
        "bmo": {"delta": 20.0, "density": 8},
        "options": {"sup_growth_min": 3.0},
    }


EXPERIMENTS = {
    "blowup": (run_blowup_sweep, lambda: _step_defaults(1),
               "step-plateau sweep delta_n = 1/n: driver statistic and bmo_phi norm blow-up"),
    "blowup-flat": (run_blowup_sweep,
                    lambda: _merge(_step_defaults(1), {"sweep": {"values": [0.5] * 3},
                                                       "options": {"expect": "flat"}}),
                    "control sweep with constant delta: no growth"),
    "cascade": (run_blowup_sweep,
                lambda: {"weight_k": 1,
                         "family": {"kind": "plateau_window",
                                    "parameters": {"alpha": 0.5, "beta": 2.0, "gamma_seq": [2, 4, 6, 8]}},
                         "sweep": {"parameter": "level", "values": [1, 2, 3, 4]},
                         "maximal": {"r": 1.0, "algorithm": "fast"},
                         "bmo": {"delta": 0.5, "density": 8}},
                "plateau cascade gamma_i = 2i: per-plateau driver vs gamma_i / beta"),
    "tail": (run_blowup_sweep,
             lambda: {"weight_k": 1,
                      "family": {"kind": "tail", "parameters": {"ell": 0.5}},
                      "sweep": {"parameter": "t", "values": [0.25, 0.1, 0.05]},
                      "maximal": {"r": 1.0, "algorithm": "fast"},
                      "bmo": {"delta": 1e-3, "density": 8},
                      "options": {"expect": "growth"}},
             "tail family s = exp(-1/t), delta = sqrt(t)"),
    "gradient-bounded": (run_blowup_sweep,
                         lambda: {"weight_k": 1,
                                  "family": {"kind": "gradient_bounded",
                                             "parameters": {"s": 1e-12, "ell": 2.0, "C": 2.0}},
                                  "sweep": {"parameter": "delta_exp", "values": [0.5, 0.25, 0.125]},
                                  "maximal": {"r": 1.0, "algorithm": "fast"},
                                  "bmo": {"delta": 0.01, "density": 8}},
                         "gradient-bounded family with shoulder |x|^(1-ell)"),
    "coifman-rochberg": (run_coifman_rochberg_contrast, lambda: _step_defaults(1),
                         "k = 0 contrast on the blow-up sweep (bounded) next to k = 1"),
    "uniform-bound": (run_uniform_bound_check,
                      lambda: {"weight_k": 1,
                               "family": {"kind": "time_blowup",
                                          "parameters": {"eps1": 0.5, "eps2": 0.5, "T": 1.0,
                                                         "amplitude": 16.0, "n": 1024}},
                               "sweep": {"values": [10.0 ** -j for j in range(1, 7)], "r_values": [0.5]},
                               "maximal": {"r": 0.5, "algorithm": "fast"},
                               "bmo": {"delta": 0.05, "density": 8}},
                      "time-blowup ladder: uniform bmo_phi bound for phi_star(M_r f_t)"),
    "multiplier": (run_multiplier_check,
                   lambda: {"weight_k": 1, "bmo": {"delta": 1e-3, "density": 8}, "seed": 20240601,
                            "options": {"pairs": 50}},
                   "pointwise multiplier inequality over a seeded corpus"),
    "lemma-checks": (run_lemma_checks,
                     lambda: {"weight_k": 1, "bmo": {"density": 8}, "options": {"nodes": 512}},
                     "derivative/oscillation constants and gradient-decay fits"),
}


def default_config(experiment: str) -> ExperimentConfig:
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    return ExperimentConfig(experiment=experiment, **EXPERIMENTS[experiment][1]())


def run_experiment(cfg: ExperimentConfig) -> SweepResult:
    """Dispatch on ``cfg.experiment``; writes outputs when ``outputs["dir"]`` is set."""
    res = EXPERIMENTS[cfg.experiment][0](cfg)
    out_dir = cfg.outputs.get("dir")
    if out_dir:
        res.write(out_dir)
    return res
