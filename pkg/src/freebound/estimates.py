"""Evaluation of the universal estimates on a computed solution.

Every entry carries ``lhs``, ``rhs`` and ``margin = rhs - lhs``; an applicable
entry passes when ``margin >= -slack * max(|lhs|, |rhs|)``. Entries whose
hypothesis does not hold are reported as not applicable. Strict inequalities
are tested in non-strict form.

All quantities (energy, peak, sup-norm) are recomputed here from ``alpha``
and ``psi`` rather than taken from the solver.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .elliptic import dirichlet_energy
from .radial import RadialSolution

GRID_SLACK = 1e-2
RADIAL_SLACK = 1e-4
ALPHA_ZERO = 1e-6
EQUALITY_ALPHA = 1e-3


@dataclass
class EstimateEntry:
    name: str
    lhs: float
    rhs: float
    applicable: bool = True
    slack: float = 0.0
    note: str = ""
    strict: bool = False  # sign test: margin > 0, no slack
    absolute: bool = False  # slack is an absolute budget rather than relative

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool | None:
        if not self.applicable:
            return None
        if self.strict:
            return self.margin > 0.0
        budget = self.slack if self.absolute else self.slack * max(abs(self.lhs), abs(self.rhs))
        return self.margin >= -budget

    @property
    def status(self) -> str:
        return {None: "n/a", True: "pass", False: "FAIL"}[self.passed]

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(margin=self.margin, status=self.status)
        return d


@dataclass
class EstimateReport:
    lam: float
    p: float
    domain: str
    n: int | None
    entries: list[EstimateEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed is not False for e in self.entries)

    @property
    def failures(self) -> list[EstimateEntry]:
        return [e for e in self.entries if e.passed is False]

    def counts(self) -> dict:
        c = {"pass": 0, "FAIL": 0, "n/a": 0}
        for e in self.entries:
            c[e.status] += 1
        return c

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "p": self.p,
            "domain": self.domain,
            "n": self.n,
            "passed": self.passed,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        head = f"lambda={self.lam:g} p={self.p:g} domain={self.domain} n={self.n}"
        rows = [head, f"{'entry':<34}{'lhs':>16}{'rhs':>16}{'margin':>14}  status"]
        for e in self.entries:
            rows.append(f"{e.name:<34}{e.lhs:>16.8g}{e.rhs:>16.8g}{e.margin:>14.4e}  {e.status}")
        return "\n".join(rows)


# ---------------------------------------------------------------- primitives

@dataclass
class _Data:
    lam: float
    p: float
    alpha: float
    energy: float
    theta: float
    psi_max: float
    ell: float
    radial: bool
    tag: str
    n: int | None


def _data(sol) -> _Data:
    if isinstance(sol, RadialSolution):
        return _Data(sol.lam, sol.p, sol.alpha, sol.energy, sol.theta, sol.psi_max, 1.0, True, "disk", None)
    psi = sol.psi.values
    rho = np.clip(sol.alpha + sol.lam * psi, 0.0, None) ** sol.p
    E = dirichlet_energy(psi, rho, sol.grid)
    pm = float(psi.max())
    return _Data(sol.lam, sol.p, sol.alpha, E, sol.lam * pm, pm, sol.domain.ell, False, sol.domain.tag, sol.domain.n)


def _slack(d: _Data, slack: float | None) -> float:
    if slack is not None:
        return slack
    return RADIAL_SLACK if d.radial else GRID_SLACK


def k_tilde(p: float) -> float:
    """``Gamma(p+2)^(1/(p+1))``; exactly ``sqrt(2)`` at ``p = 1``."""
    return math.gamma(p + 2.0) ** (1.0 / (p + 1.0))


def conjugate(p: float) -> float:
    """``1/q = 1 - 1/p``; returns ``1/q`` (zero at ``p = 1``)."""
    return 1.0 - 1.0 / p


def g_lower_bound(p: float) -> float:
    """Piecewise floor on ``lam`` for solutions with ``alpha = 0``; overlapping pieces take the max."""
    if p < 1:
        raise ValueError("p must be >= 1")
    e = math.e
    pieces = [
        (1.0, 4.0, lambda t: 16 * math.pi / (e * (t + 1))),
        (4.0, 16.0, lambda t: 16 * math.pi / (e * t)),
        (16.0, 24.0, lambda t: 16 * math.pi / (e * t) * (t + 1) / t),
        (24.0, 48.0, lambda t: 24 * math.pi / (e * (t + 1))),
        (48.0, math.inf, lambda t: 24 * math.pi / (e * t) * 1.5),
    ]
    return max(f(p) for a, b, f in pieces if a <= p <= b)


# ---------------------------------------------------------------- checks

def check_energy_theorem(sol, slack: float | None = None) -> list[EstimateEntry]:
    d = _data(sol)
    s = _slack(d, slack)
    cap = (d.p + 1.0) / (16.0 * math.pi)
    return [
        EstimateEntry("energy_identity_bound", d.alpha * (1.0 - d.alpha**d.p), 2.0 * d.lam * (cap - d.energy), slack=s),
        EstimateEntry("energy_cap", d.energy, cap, slack=s),
    ]


def check_linf_bounds(sol, slack: float | None = None) -> list[EstimateEntry]:
    d = _data(sol)
    s = _slack(d, slack)
    p, lam = d.p, d.lam
    green = k_tilde(p) / (4.0 * math.pi) * max(d.alpha + 2.0 * lam * d.energy, 0.0) ** (p / (p + 1.0))
    universal = (p + 1.0) / (4.0 * math.pi) * (1.0 + lam * p / (8.0 * math.pi))
    ok3 = lam < 2.0 * math.pi / p
    peak_rhs = lam * d.ell / (2.0 * math.pi - lam * p) if ok3 else math.nan
    return [
        EstimateEntry("linf_green", d.psi_max, green, slack=s),
        EstimateEntry("linf_universal", d.psi_max, universal, slack=s),
        EstimateEntry("peak_small_lambda", d.theta, peak_rhs, applicable=ok3, slack=s,
                      note="" if ok3 else "needs lam < 2 pi / p"),
    ]


def check_thresholds(sol, slack: float | None = None) -> list[EstimateEntry]:
    d = _data(sol)
    s = _slack(d, slack)
    p, lam, a = d.p, d.lam, d.alpha
    e = math.e
    h1 = lam <= 4.0 * math.pi / (e * p)
    h2 = lam <= 4.0 * math.pi / (e * p * d.ell)
    zero = a <= ALPHA_ZERO
    return [
        EstimateEntry("alpha_above_half", 0.5, a, applicable=h1, slack=s),
        EstimateEntry("alpha_above_max_half_invq", max(0.5, conjugate(p)), a, applicable=h2, slack=s),
        EstimateEntry("alpha_zero_lambda_floor", 16.0 * math.pi / (e * (p + 1.0)), lam, applicable=zero, slack=s),
        EstimateEntry("alpha_zero_lambda_g", g_lower_bound(p), lam, applicable=zero, slack=s),
    ]


def check_corollary_current(fb, lambda_star_val: float, slack: float = GRID_SLACK) -> EstimateEntry:
    """``I >= lambda_*^q`` for boundary values ``gamma <= 0`` (tested at ``gamma ~ 0``)."""
    p = fb.p
    if p <= 1:
        raise ValueError("needs p > 1")
    q = p / (p - 1.0)
    ok = fb.gamma <= ALPHA_ZERO
    return EstimateEntry("current_lower_bound", lambda_star_val**q, fb.I, applicable=ok, slack=slack,
                         note="" if ok else "gamma > 0")


def is_equality_case(d: _Data, lambda_star_val: float, rel: float = 1e-6) -> bool:
    at = abs(d.lam - lambda_star_val) <= rel * lambda_star_val
    return at and (d.p == 1.0 or d.tag == "disk")


def check_positivity_theorem(sol, lambda_star_val: float) -> EstimateEntry:
    d = _data(sol)
    ok = d.lam <= lambda_star_val + 1e-9 or is_equality_case(d, lambda_star_val)
    if ok and is_equality_case(d, lambda_star_val):
        return EstimateEntry("alpha_zero_at_threshold", abs(d.alpha), EQUALITY_ALPHA, note="equality case")
    return EstimateEntry("alpha_positive", 0.0, d.alpha, applicable=ok, strict=True,
                         note="" if ok else "lam > lambda_*")


CHECKS = ("energy", "linf", "thresholds")


def evaluate(sol, checks=CHECKS, lambda_star_val: float | None = None, slack: float | None = None) -> EstimateReport:
    d = _data(sol)
    rep = EstimateReport(d.lam, d.p, d.tag, d.n)
    if "energy" in checks:
        rep.entries += check_energy_theorem(sol, slack)
    if "linf" in checks:
        rep.entries += check_linf_bounds(sol, slack)
    if "thresholds" in checks:
        rep.entries += check_thresholds(sol, slack)
    if lambda_star_val is not None:
        rep.entries.append(check_positivity_theorem(sol, lambda_star_val))
    return rep
