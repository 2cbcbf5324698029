"""Parameter sweeps over (domain, p, lambda) and the threshold table."""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .domain import DomainSpec, normalize
from .errors import FreeboundError, NegativeAlphaRegime
from .estimates import GRID_SLACK, EstimateEntry, check_positivity_theorem, evaluate
from .levelset import check_integrated_inequality, energy_flux_consistency, profile
from .radial import solve_disk_radial
from .sobolev import lambda_star
from .solver import solve_plm, to_free_boundary
from .variational import minimize_J, positivity_threshold

CHECK_GROUPS = ("energy", "linf", "thresholds", "levelset", "sobolev", "variational", "duality")
CSV_FIELDS = ["domain", "n", "p", "lambda", "solver", "entry", "lhs", "rhs", "margin", "slack", "status"]


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def lambda_values(spec) -> list[float]:
    """Explicit list, or ``{min, max, count, spacing: linear|log}``."""
    if isinstance(spec, dict):
        lo, hi, count = float(spec["min"]), float(spec["max"]), int(spec["count"])
        if count < 1:
            raise ValueError("lambda count must be positive")
        spacing = spec.get("spacing", "linear")
        if spacing == "linear":
            vals = np.linspace(lo, hi, count)
        elif spacing == "log":
            if lo <= 0:
                raise ValueError("log spacing needs min > 0")
            vals = np.geomspace(lo, hi, count)
        else:
            raise ValueError(f"unknown spacing {spacing!r}")
        return [float(v) for v in vals]
    return [float(v) for v in spec]


@dataclass
class SweepConfig:
    domains: list[DomainSpec]
    p_values: list[float]
    lambdas: list[float]
    n: int | None = None
    checks: tuple[str, ...] = CHECK_GROUPS
    out: str | None = None
    slack: float | None = None
    workers: int = 1

    def __post_init__(self):
        if not self.domains:
            raise ValueError("config needs at least one domain")
        if not self.p_values or any(p < 1 for p in self.p_values):
            raise ValueError("config needs a nonempty list of p >= 1")
        if not self.lambdas:
            raise ValueError("config needs a nonempty lambda list")
        if any(lam < 0 for lam in self.lambdas):
            raise ValueError("lambda values must be >= 0")
        unknown = set(self.checks) - set(CHECK_GROUPS)
        if unknown:
            raise ValueError(f"unknown check groups {sorted(unknown)}")
        if self.slack is not None and not 1e-6 <= self.slack <= 1e-1:
            raise ValueError("slack override must lie in [1e-6, 1e-1]")
        if self.n is not None:
            self.domains = [replace(d, n=self.n) for d in self.domains]

    @classmethod
    def from_dict(cls, d: dict) -> SweepConfig:
        checks = d.get("checks", "all")
        if checks == "all":
            checks = CHECK_GROUPS
        return cls(
            domains=[DomainSpec.from_dict(x) for x in d["domains"]],
            p_values=[float(p) for p in d["p"]],
            lambdas=lambda_values(d["lambda"]),
            n=d.get("n"),
            checks=tuple(checks),
            out=d.get("out"),
            slack=d.get("slack"),
            workers=int(d.get("workers", 1)),
        )

    @classmethod
    def from_json(cls, path) -> SweepConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "domains": [d.to_dict() for d in self.domains],
            "p": list(self.p_values),
            "lambda": list(self.lambdas),
            "checks": list(self.checks),
            "slack": self.slack,
        }

    def cells(self) -> list[tuple[DomainSpec, float, float]]:
        cells = [(d, p, lam) for d in self.domains for p in self.p_values for lam in self.lambdas]
        return sorted(cells, key=lambda c: (_domain_key(c[0]), c[1], c[2]))


def _domain_key(spec: DomainSpec) -> str:
    return json.dumps(spec.to_dict(), sort_keys=True)


# ---------------------------------------------------------------- one cell

def run_cell(spec: DomainSpec, p: float, lam: float, checks, slack: float | None) -> dict:
    """Solve one cell and evaluate the selected checks; never raises solver errors."""
    domain = normalize(spec)
    cell = {"domain": domain.tag, "n": domain.n, "p": p, "lambda": lam, "entries": [], "error": None}
    sol_checks = [c for c in checks if c in ("energy", "linf", "thresholds")]
    s = slack if slack is not None else GRID_SLACK

    def add(solver, entries):
        for e in entries:
            d = e.to_dict()
            d["solver"] = solver
            cell["entries"].append(d)

    try:
        sol = solve_plm(domain, lam, p)
    except NegativeAlphaRegime as exc:
        cell["status"] = "no-solution"
        cell["error"] = str(exc)
        return cell
    except FreeboundError as exc:
        cell["status"] = "error"
        cell["error"] = f"{type(exc).__name__}: {exc}"
        return cell
    cell["solution"] = sol.header()
    cell["solution"]["method"] = sol.method
    cell["solution"]["monotone"] = sol.monotone
    add("grid", evaluate(sol, sol_checks, slack=slack).entries)

    if domain.is_disk:
        try:
            rad = solve_disk_radial(lam, p)
            add("radial", evaluate(rad, sol_checks, slack=None if slack is None else min(slack, 1e-4)).entries)
        except FreeboundError as exc:
            cell["radial_error"] = str(exc)

    if "levelset" in checks and lam > 0:
        prof = profile(sol, 200)
        add("grid", [
            EstimateEntry("level_inequality", check_integrated_inequality(prof, sol.alpha, lam, p), 0.0,
                          slack=s, absolute=True),
            EstimateEntry("energy_flux_consistency", energy_flux_consistency(prof), 0.05),
        ])
    if "sobolev" in checks:
        ls = lambda_star(domain, p)
        cell["lambda_star"] = ls
        add("grid", [check_positivity_theorem(sol, ls)])
    if "variational" in checks:
        var = minimize_J(domain, lam, p)
        add("grid", [
            EstimateEntry("variational_alpha", abs(var.alpha - sol.alpha), 1e-3),
            EstimateEntry("variational_density", float(np.abs(var.density.values - sol.density).max()), 1e-3),
        ])
    if "duality" in checks and p > 1 and lam > 0:
        fb = to_free_boundary(sol)
        back = fb.I ** (-1.0 / p) * fb.v.values
        err = float(np.abs(back - (sol.alpha + lam * sol.psi.values)).max())
        add("grid", [
            EstimateEntry("duality_identity", err, 1e-10),
            EstimateEntry("duality_current", abs(fb.current - fb.I) / fb.I, 1e-4),
        ])
    failed = [e for e in cell["entries"] if e["status"] == "FAIL"]
    cell["status"] = "fail" if failed else "pass"
    return cell


def _run_cell_args(args):
    return run_cell(*args)


# ---------------------------------------------------------------- sweep

@dataclass
class SweepSummary:
    cells: list[dict]
    counts: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[str]:
        out = []
        for c in self.cells:
            where = f"{c['domain']} n={c['n']} p={c['p']:g} lambda={c['lambda']:g}"
            if c["status"] == "error":
                out.append(f"{where}: {c['error']}")
            for e in c["entries"]:
                if e["status"] == "FAIL":
                    out.append(f"{where}: {e['solver']}:{e['name']} lhs={e['lhs']:.6g} rhs={e['rhs']:.6g}")
        return out

    @property
    def ok(self) -> bool:
        return not self.failures


def _cell_name(c: dict) -> str:
    return f"{c['domain']}_n{c['n']}_p{c['p']:g}_lam{c['lambda']:.12g}.json"


def write_csv(cells: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_FIELDS)
        for c in cells:
            for e in c["entries"]:
                w.writerow([
                    _fmt(c["domain"]), _fmt(c["n"]), _fmt(float(c["p"])), _fmt(float(c["lambda"])),
                    e["solver"], e["name"], _fmt(float(e["lhs"])), _fmt(float(e["rhs"])),
                    _fmt(float(e["margin"])), _fmt(float(e["slack"])), e["status"],
                ])
            if not c["entries"]:
                w.writerow([_fmt(c["domain"]), _fmt(c["n"]), _fmt(float(c["p"])), _fmt(float(c["lambda"])),
                            "", "", "", "", "", "", c["status"]])


def run_sweep(config: SweepConfig) -> SweepSummary:
    """Run every cell; results are ordered by (domain, p, lambda) regardless of completion order."""
    args = [(d, p, lam, config.checks, config.slack) for d, p, lam in config.cells()]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            cells = list(pool.map(_run_cell_args, args))
    else:
        cells = [_run_cell_args(a) for a in args]
    counts = {"pass": 0, "FAIL": 0, "n/a": 0, "cells": len(cells),
              "no-solution": sum(c["status"] == "no-solution" for c in cells),
              "error": sum(c["status"] == "error" for c in cells)}
    for c in cells:
        for e in c["entries"]:
            counts[e["status"]] += 1
    summary = SweepSummary(cells, counts)
    if config.out:
        out = Path(config.out)
        (out / "cells").mkdir(parents=True, exist_ok=True)
        for c in cells:
            (out / "cells" / _cell_name(c)).write_text(json.dumps(c, indent=2, sort_keys=True, default=float))
        write_csv(cells, out / "summary.csv")
        manifest = {"created": time.strftime("%Y-%m-%dT%H:%M:%S"), "config": config.to_dict(), "counts": counts}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return summary


# ---------------------------------------------------------------- thresholds

def threshold_row(spec: DomainSpec, p: float, rel_tol: float = 1e-3) -> dict:
    domain = normalize(spec)
    ls = lambda_star(domain, p)
    lo, hi = 0.9 * ls, 1.05 * ls
    while minimize_J(domain, hi, p).alpha > 0:
        lo, hi = hi, 1.25 * hi
    l2 = positivity_threshold(domain, p, (lo, hi), tol=rel_tol * ls)
    ratio = l2 / ls
    return {
        "domain": domain.tag,
        "n": domain.n,
        "p": p,
        "lambda_star": ls,
        "lambda_2star": l2,
        "ratio": ratio,
        "disk_equality": bool(domain.is_disk and abs(ratio - 1.0) <= 0.02),
    }


def emit_threshold_table(config: SweepConfig, path=None) -> list[dict]:
    rows = [threshold_row(d, p) for d in sorted(config.domains, key=_domain_key) for p in config.p_values]
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            keys = list(rows[0])
            w.writerow(keys)
            for r in rows:
                w.writerow([_fmt(r[k]) if not isinstance(r[k], bool) else str(r[k]).lower() for k in keys])
    return rows


__all__ = [
    "SweepConfig", "SweepSummary", "run_sweep", "run_cell", "emit_threshold_table", "threshold_row",
    "lambda_values", "CHECK_GROUPS",
]
