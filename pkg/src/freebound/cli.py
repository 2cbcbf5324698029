"""Command-line entry point: ``freebound {solve,sweep,thresholds,sobolev,profile}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .domain import DomainSpec, normalize
from .elliptic import write_field_csv
from .errors import FreeboundError
from .estimates import evaluate
from .levelset import profile
from .sobolev import best_constant, lambda_star_from
from .solver import solve_plm
from .sweep import SweepConfig, emit_threshold_table, run_sweep


def _add_shape(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--config", help="JSON domain spec (or sweep config for sweep/thresholds)")
    ap.add_argument("--shape", choices=["disk", "rectangle", "polygon"], default="disk")
    ap.add_argument("--aspect", type=float, help="rectangle aspect ratio")
    ap.add_argument("--vertices", help='polygon vertices as JSON, e.g. "[[0,0],[1,0],[0,1]]"')
    ap.add_argument("--n", type=int, help="grid resolution (cells per unit length)")


def _spec(args) -> DomainSpec:
    if args.config:
        d = json.loads(Path(args.config).read_text())
    else:
        d = {"shape": args.shape}
        if args.aspect is not None:
            d["aspect"] = args.aspect
        if args.vertices:
            d["vertices"] = json.loads(args.vertices)
    if args.n is not None:
        d["n"] = args.n
    return DomainSpec.from_dict(d)


def _out(path):
    if path is None:
        return None
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_solve(args) -> int:
    domain = normalize(_spec(args))
    sol = solve_plm(domain, args.lam, args.p)
    header = sol.header()
    print(json.dumps(header, indent=2, sort_keys=True))
    rep = evaluate(sol, slack=args.slack)
    print(rep.to_text())
    out = _out(args.out)
    if out:
        (out / "solution.json").write_text(json.dumps(header, indent=2, sort_keys=True))
        write_field_csv(sol.psi, out / "psi.csv")
        (out / "report.json").write_text(rep.to_json())
    for e in rep.failures:
        print(f"FAIL {e.name}: lhs={e.lhs:.6g} rhs={e.rhs:.6g}", file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_sweep(args) -> int:
    d = json.loads(Path(args.config).read_text())
    if args.out:
        d["out"] = args.out
    if args.n is not None:
        d["n"] = args.n
    if args.workers is not None:
        d["workers"] = args.workers
    if args.slack is not None:
        d["slack"] = args.slack
    summary = run_sweep(SweepConfig.from_dict(d))
    print(json.dumps(summary.counts, sort_keys=True))
    for line in summary.failures:
        print(line, file=sys.stderr)
    return 0 if summary.ok else 1


def cmd_thresholds(args) -> int:
    if args.config:
        d = json.loads(Path(args.config).read_text())
        if "domains" not in d:
            d = {"domains": [d], "p": args.p, "lambda": [0.0]}
        d.setdefault("p", args.p)
        d.setdefault("lambda", [0.0])
    else:
        d = {"domains": [_spec(args).to_dict()], "p": args.p, "lambda": [0.0]}
    if args.n is not None:
        d["n"] = args.n
    cfg = SweepConfig.from_dict(d)
    out = _out(args.out)
    rows = emit_threshold_table(cfg, out / "thresholds.csv" if out else None)
    keys = list(rows[0])
    print(",".join(keys))
    for r in rows:
        print(",".join(f"{r[k]:.12g}" if isinstance(r[k], float) else str(r[k]).lower() for k in keys))
    return 0


def cmd_sobolev(args) -> int:
    domain = normalize(_spec(args))
    s = args.s if args.s is not None else args.p + 1.0
    res = best_constant(domain, s)
    rec = res.to_dict(p=s - 1.0)
    print(json.dumps(rec, indent=2, sort_keys=True))
    out = _out(args.out)
    if out:
        (out / "sobolev.json").write_text(json.dumps(rec, indent=2, sort_keys=True))
    return 0


def cmd_profile(args) -> int:
    domain = normalize(_spec(args))
    sol = solve_plm(domain, args.lam, args.p)
    prof = profile(sol, args.levels)
    out = _out(args.out)
    path = out / "profile.csv" if out else None
    if path:
        prof.write_csv(path)
    else:
        print("t,mu,m,e,residual")
        for row in zip(prof.t, prof.mu, prof.m, prof.e, prof.residual):
            print(",".join(f"{x:.12g}" for x in row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freebound", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="solve one (domain, p, lambda) cell and print its report")
    _add_shape(sp)
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--slack", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_solve)

    sw = sub.add_parser("sweep", help="run a sweep from a JSON config")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out")
    sw.add_argument("--n", type=int)
    sw.add_argument("--workers", type=int)
    sw.add_argument("--slack", type=float)
    sw.set_defaults(func=cmd_sweep)

    th = sub.add_parser("thresholds", help="compare the explicit threshold with the bisected one")
    _add_shape(th)
    th.add_argument("--p", type=float, nargs="+", default=[1.0, 2.0])
    th.add_argument("--out")
    th.set_defaults(func=cmd_thresholds)

    so = sub.add_parser("sobolev", help="best Sobolev constant for exponent s (default p + 1)")
    _add_shape(so)
    so.add_argument("--p", type=float, default=2.0)
    so.add_argument("--s", type=float)
    so.add_argument("--out")
    so.set_defaults(func=cmd_sobolev)

    pr = sub.add_parser("profile", help="level-set profile CSV for one cell")
    _add_shape(pr)
    pr.add_argument("--lam", type=float, required=True)
    pr.add_argument("--p", type=float, default=2.0)
    pr.add_argument("--levels", type=int, default=200)
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_profile)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FreeboundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
