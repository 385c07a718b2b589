"""Command-line entry point: ``oscilab <verb> ...``.

Exit codes: 0 when every verdict passes (or the verb has none), 1 when
any verdict fails, 2 on usage or parameter errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .families import FamilySpec
from .lab import EXPERIMENTS, ExperimentConfig, default_config, run_experiment
from .maximal import MaximalOptions, maximal_function
from .oscillation import weighted_bmo_norm
from .sampled import read_csv
from .weights import LogWeight

# flag name -> (keyword argument, type); flags follow the usual symbols
_KIND_FLAGS = {
    "step_plateau": {"s": ("s", float), "delta": ("delta_exp", float), "eps": ("eps", float),
                     "C": ("C", float), "mollify-width": ("mollify_width", float)},
    "tail": {"t": ("t", float), "ell": ("ell", float), "C": ("C", float),
             "eps-ratio": ("eps_ratio", float), "s-floor": ("s_floor", float)},
    "gradient_bounded": {"s": ("s", float), "delta": ("delta_exp", float), "ell": ("ell", float),
                         "C": ("C", float)},
    "plateau_cascade": {"alpha": ("alpha", float), "beta": ("beta", float),
                        "gamma": ("gamma_seq", "floats"), "N": ("N", int), "ramp": ("ramp", float)},
    "plateau_window": {"alpha": ("alpha", float), "beta": ("beta", float),
                       "gamma": ("gamma_seq", "floats"), "i": ("i", int),
                       "half-width": ("half_width", float), "ramp": ("ramp", float)},
    "time_blowup": {"eps1": ("eps1", float), "eps2": ("eps2", float), "T": ("T", float),
                    "t": ("t", float), "amplitude": ("amplitude", float), "n": ("n", int)},
}


class UsageError(Exception):
    pass


def _floats(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def _add_generate(sub):
    p = sub.add_parser("generate", help="build a test-family member and write it as CSV")
    p.add_argument("--kind", required=True, choices=sorted(_KIND_FLAGS))
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--meta", help="optional JSON path for the construction metadata")
    seen = set()
    for flags in _KIND_FLAGS.values():
        for flag in flags:
            if flag not in seen:
                seen.add(flag)
                p.add_argument(f"--{flag}", dest=f"fam_{flag}", metavar="VALUE")
    return p


def _family_params(args) -> dict:
    params = {}
    for flag, (key, typ) in _KIND_FLAGS[args.kind].items():
        raw = getattr(args, f"fam_{flag}")
        if raw is not None:
            params[key] = _floats(raw) if typ == "floats" else typ(raw)
    for flag in {f for flags in _KIND_FLAGS.values() for f in flags} - set(_KIND_FLAGS[args.kind]):
        if getattr(args, f"fam_{flag}") is not None:
            raise UsageError(f"--{flag} is not a parameter of kind {args.kind}")
    return params


def _cmd_generate(args) -> int:
    f = FamilySpec(args.kind, _family_params(args)).build()
    f.to_csv(args.out)
    if args.meta:
        meta = {k: (list(v) if isinstance(v, tuple) else v) for k, v in f.meta.items()}
        Path(args.meta).write_text(json.dumps(meta, sort_keys=True, indent=2, default=str) + "\n")
    print(f"wrote {len(f)} nodes to {args.out}")
    return 0


def _cmd_maximal(args) -> int:
    f = read_csv(args.input)
    opts = MaximalOptions(r=args.r, delta_trunc=args.trunc, algorithm=args.algo,
                          candidate_density=args.candidate_density)
    Mf = maximal_function(f, opts)
    Mf.to_csv(args.out)
    print(f"wrote maximal function ({opts.algorithm}, r={opts.r}) to {args.out}")
    return 0


def _cmd_bmo(args) -> int:
    f = read_csv(args.input)
    rep = weighted_bmo_norm(f, LogWeight(args.weight_k), args.delta, args.density,
                            length_scale=args.length_scale)
    text = json.dumps(rep.to_dict(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(f"norm={rep.norm_value:.12g} l1_part={rep.l1_part:.12g} sup_part={rep.sup_part:.12g}")
    return 0


def _cmd_experiment(args) -> int:
    if args.action == "list":
        for name, (_, _, desc) in EXPERIMENTS.items():
            print(f"{name:18s} {desc}")
        return 0
    if args.id is None:
        raise UsageError("experiment run needs an experiment id")
    if args.id not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.id!r}; see 'oscilab experiment list'")
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        if cfg.experiment != args.id:
            raise UsageError(f"config is for {cfg.experiment!r}, not {args.id!r}")
    else:
        cfg = default_config(args.id)
    if args.out_dir:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "outputs": {"dir": args.out_dir}})
    res = run_experiment(cfg)
    for v in res.verdicts:
        print(f"{'PASS' if v['passed'] else 'FAIL'}  {v['name']}: {v['value']}")
    print(f"config_hash={res.config_hash} runtime={res.runtime:.1f}s")
    return 0 if res.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oscilab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    _add_generate(sub)
    fam = sub.add_parser("families", help="family tools (alias group for generate)")
    fam_sub = fam.add_subparsers(dest="fam_verb", required=True)
    _add_generate(fam_sub)

    p = sub.add_parser("maximal", help="uncentered maximal function of a sampled CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--trunc", type=float, default=None, help="largest admissible interval length")
    p.add_argument("--algo", choices=("fast", "brute"), default="fast")
    p.add_argument("--candidate-density", type=int, default=0)

    p = sub.add_parser("bmo-norm", help="weighted local bmo norm of a sampled CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--weight-k", type=int, default=1)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--density", type=int, default=16)
    p.add_argument("--length-scale", type=float, default=1.0,
                   help="physical length of one grid unit")
    p.add_argument("--out")

    p = sub.add_parser("experiment", help="run or list experiments")
    p.add_argument("action", choices=("run", "list"))
    p.add_argument("id", nargs="?")
    p.add_argument("--config", help="JSON file mirroring ExperimentConfig fields")
    p.add_argument("--out-dir", help="write <id>.csv and <id>.json here")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        if args.verb in ("generate", "families"):
            return _cmd_generate(args)
        if args.verb == "maximal":
            return _cmd_maximal(args)
        if args.verb == "bmo-norm":
            return _cmd_bmo(args)
        return _cmd_experiment(args)
    except (UsageError, ValueError, KeyError, TypeError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"oscilab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
