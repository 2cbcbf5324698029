"""Acceptance criteria, one test per criterion.

Each test records a one-line verdict that is printed in the terminal summary
and also asserts it, so a failing criterion fails the suite.
"""
import functools
import math

import numpy as np
import pytest

from freebound.elliptic import green_operator, kappa, kp_constant, green_point, torsion
from freebound.estimates import (
    check_corollary_current,
    check_energy_theorem,
    check_linf_bounds,
    check_thresholds,
    g_lower_bound,
    k_tilde,
)
from freebound.levelset import check_integrated_inequality, energy_flux_consistency, profile, profile_radial
from freebound.radial import disk_threshold, solve_disk_radial
from freebound.sobolev import best_constant, lambda_star
from freebound.solver import solve_alpha_zero, solve_plm, to_free_boundary
from freebound.sweep import SweepConfig, run_sweep
from freebound.variational import minimize_J, positivity_threshold
from tests.conftest import ACCEPTANCE, domain
from tests.oracles import DISK_EIGENVALUE, DISK_THRESHOLD, SQUARE_EIGENVALUE

TAGS = ("disk", "square", "rectangle2")
PS = (1.0, 2.0, 3.0)
LAMS = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0)
N = 128


@functools.lru_cache(maxsize=None)
def solution(tag, p, lam, n=N):
    return solve_plm(domain(tag, n), lam, p)


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_c01_disk_baseline():
    s = solution("disk", 1.0, 0.0)
    e_err = abs(s.energy * 16 * math.pi - 1)
    m_err = abs(s.psi.values.max() * 4 * math.pi - 1)
    record(1, e_err <= 1e-2 and m_err <= 1e-2, f"rel err E0 {e_err:.2e}, max psi0 {m_err:.2e} (<= 1e-2)")


def test_c02_disk_equality():
    worst_rad, worst_grid, trend = 0.0, 0.0, True
    for p in PS:
        for lam in (0.5, 1.0, 2.0):
            worst_rad = max(worst_rad, abs(check_energy_theorem(solve_disk_radial(lam, p))[0].margin))
            res = [abs(check_energy_theorem(solve_plm(domain("disk", n), lam, p))[0].margin) for n in (64, 128, 256)]
            worst_grid = max(worst_grid, max(res))
            trend &= res[0] > res[1] > res[2]
    ok = worst_rad <= 1e-4 and worst_grid <= 1e-2 and trend
    record(2, ok, f"radial |margin| {worst_rad:.2e} (<= 1e-4), grid {worst_grid:.2e} (<= 1e-2), decreasing {trend}")


def test_c03_strict_off_disk():
    worst = math.inf
    for tag in ("square", "rectangle2"):
        for p in PS:
            for lam in (0.5, 1.0, 2.0):
                worst = min(worst, check_energy_theorem(solution(tag, p, lam))[0].margin)
    record(3, worst > 1e-3, f"smallest margin {worst:.3e} (> 1e-3)")


def test_c04_energy_cap():
    worst = -math.inf
    for tag in TAGS:
        for p in PS:
            for lam in LAMS:
                s = solution(tag, p, lam)
                worst = max(worst, s.energy / ((p + 1) / (16 * math.pi)) - 1)
    record(4, worst <= 1e-2, f"max E / cap - 1 = {worst:.3e} over {len(TAGS) * len(PS) * len(LAMS)} cells (<= 1e-2)")


def test_c05_sobolev():
    sq = best_constant(domain("square", N), 2.0).Lambda / SQUARE_EIGENVALUE - 1
    dk = best_constant(domain("disk", N), 2.0).Lambda / DISK_EIGENVALUE - 1
    order = all(
        lambda_star(domain(tag, N), p) >= lambda_star(domain("disk", N), p) for tag in TAGS for p in PS
    )
    ok = abs(sq) <= 1e-2 and abs(dk) <= 1e-2 and order
    record(5, ok, f"square rel err {sq:+.2e}, disk {dk:+.2e} (<= 1e-2), ordering {order}")


def test_c06_disk_threshold_equality():
    d = domain("disk", N)
    details, ok = [], True
    for p, bracket in ((1.0, (16.0, 20.0)), (2.0, (11.0, 14.0))):
        ls = lambda_star(d, p)
        l2 = positivity_threshold(d, p, bracket, tol=1e-3 * ls)
        ok &= abs(l2 / ls - 1) <= 2e-2
        if p == 1.0:
            ok &= abs(l2 / DISK_EIGENVALUE - 1) <= 2e-2 and abs(ls / DISK_EIGENVALUE - 1) <= 2e-2
        details.append(f"p={p:g}: lam** {l2:.4f} lam_* {ls:.4f}")
    record(6, ok, "; ".join(details) + f"; pi j0^2 = {DISK_EIGENVALUE:.4f} (2%)")


def test_c07_explicit_thresholds():
    fails, applied = [], 0
    for tag in TAGS:
        for p in PS:
            for lam in LAMS:
                for e in check_thresholds(solution(tag, p, lam))[:2]:
                    if e.applicable:
                        applied += 1
                        if e.rhs <= e.lhs:
                            fails.append(f"{tag} p={p:g} lam={lam:g} {e.name}")
    zeros = []
    for tag in TAGS:
        for p in PS:
            lam = solve_alpha_zero(domain(tag, N), p).lam
            zeros.append(lam > max(16 * math.pi / (math.e * (p + 1)), g_lower_bound(p)))
    for p in PS:
        zeros.append(disk_threshold(p) > max(16 * math.pi / (math.e * (p + 1)), g_lower_bound(p)))
    ok = not fails and all(zeros)
    record(7, ok, f"{applied} alpha entries strict, failures {fails}; {sum(zeros)}/{len(zeros)} alpha=0 floors hold")


def test_c08_linf():
    # at lam = 0 the peak bound reads 0 <= 0, so that single entry can only hold with equality
    worst, cells, degenerate = math.inf, 0, True
    for tag in TAGS:
        for p in PS:
            for lam in LAMS:
                cells += 1
                for e in check_linf_bounds(solution(tag, p, lam)):
                    if not e.applicable:
                        continue
                    if lam == 0 and e.name == "peak_small_lambda":
                        degenerate &= e.lhs == 0.0 and e.rhs == 0.0
                    else:
                        worst = min(worst, e.margin)
    exact = k_tilde(1.0) == math.sqrt(2.0)
    record(8, worst > 0 and degenerate and exact,
           f"smallest margin {worst:.3e} over {cells} cells (> 0), lam=0 peak entry 0 <= 0: {degenerate}, "
           f"k~_1 == sqrt 2: {exact}")


def test_c09_green_constants():
    gd = green_operator(domain("disk", 256))
    k1 = kp_constant(gd, (0.0, 0.0), 1.0) / (math.sqrt(2) / (4 * math.pi)) - 1
    kd = kappa(gd) - 1
    ks = kappa(green_operator(domain("square", N)))
    worst = -math.inf
    for tag in TAGS:
        g = green_operator(domain(tag, N))
        tor = torsion(g)
        k = int(np.argmax(tor.values))
        x0 = (g.grid.x[k], g.grid.y[k])
        G = green_point(g, x0)
        for p in PS:
            worst = max(worst, kp_constant(g, x0, p, G) / (k_tilde(p) / (4 * math.pi)) - 1)
    ok = abs(k1) <= 2e-2 and abs(kd) <= 1e-2 and ks < 1 and worst <= 2e-2
    record(9, ok, f"k_1(disk) rel {k1:+.2e}, kappa(disk)-1 {kd:+.2e}, kappa(square) {ks:.4f}, max k_p/bound-1 {worst:+.2e}")


def test_c10_level_sets():
    sq = max(
        check_integrated_inequality(profile(s, 200), s.alpha, s.lam, s.p)
        for s in (solution("square", p, lam) for p in PS for lam in LAMS if lam > 0)
    )
    band, tight = 0.0, True
    for p in PS:
        for lam in (0.5, 1.0, 2.0):
            rad = solve_disk_radial(lam, p)
            r200 = np.abs(profile_radial(rad, 200).residual).max()
            r400 = np.abs(profile_radial(rad, 400).residual).max()
            band = max(band, r200, r400)
            tight &= r400 < r200
    diffem = max(
        energy_flux_consistency(profile(solution(tag, p, lam), 200))
        for tag in TAGS for p in PS for lam in LAMS if lam > 0
    )
    ok = sq <= 1e-2 and band <= 1e-3 and tight and diffem <= 5e-2
    record(10, ok, f"square max residual {sq:.2e} (<= 1e-2), disk |residual| {band:.2e} (<= 1e-3), "
                   f"tightens {tight}, e-m gap {diffem:.2e} (<= 5e-2)")


def test_c11_duality():
    worst = 0.0
    for tag in TAGS:
        for p in (2.0, 3.0):
            for lam in LAMS[1:]:
                s = solution(tag, p, lam)
                fb = to_free_boundary(s)
                back = fb.I ** (-1.0 / p) * fb.v.values
                worst = max(worst, float(np.abs(back - (s.alpha + lam * s.psi.values)).max()))
    rel = []
    for p in (2.0, 3.0):
        fb = to_free_boundary(solve_alpha_zero(domain("disk", N), p))
        e = check_corollary_current(fb, DISK_THRESHOLD[int(p)])
        rel.append(fb.I / e.lhs - 1)
    ok = worst <= 1e-10 and all(abs(r) <= 2e-2 for r in rel)
    record(11, ok, f"round trip {worst:.2e} (<= 1e-10), I / lam_*^q - 1 = "
                   + ", ".join(f"{r:+.2e}" for r in rel) + " (2%)")


def test_c12_variational():
    s = solution("disk", 2.0, 1.0)
    r = minimize_J(domain("disk", N), 1.0, 2.0)
    da = abs(r.alpha - s.alpha)
    drho = float(np.abs(r.density.values - s.density).max())
    r0 = minimize_J(domain("disk", N), 0.0, 2.0)
    dj = abs(r0.J - 2 / 3)
    du = float(np.abs(r0.density.values - 1).max())
    ok = da <= 1e-3 and drho <= 1e-3 and dj <= 1e-8 and du <= 1e-8
    record(12, ok, f"|d alpha| {da:.2e}, |d rho| {drho:.2e} (<= 1e-3); lam=0: |J - 2/3| {dj:.2e}, "
                   f"|rho - 1| {du:.2e} (<= 1e-8)")


def test_c13_determinism(tmp_path):
    cfg = {"domains": [{"shape": "disk"}, {"shape": "rectangle", "aspect": 2.0}], "p": [1, 2],
           "lambda": [0.5, 2.0], "checks": "all", "n": 64}
    run_sweep(SweepConfig.from_dict({**cfg, "out": str(tmp_path / "a")}))
    run_sweep(SweepConfig.from_dict({**cfg, "out": str(tmp_path / "b"), "workers": 2}))
    run_sweep(SweepConfig.from_dict({**cfg, "out": str(tmp_path / "c")}))
    a, b, c = ((tmp_path / x / "summary.csv").read_bytes() for x in "abc")
    lines = len(a.splitlines())
    record(13, a == b == c and lines > 1, f"three runs, {lines} CSV lines, identical {a == b == c}")
