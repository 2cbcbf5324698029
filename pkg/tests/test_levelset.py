import math

import numpy as np
import pytest

from freebound.estimates import check_energy_theorem
from freebound.levelset import (
    check_integrated_inequality,
    energy_flux_consistency,
    profile,
    profile_radial,
    zero_level_value,
)
from freebound.radial import solve_disk_radial
from freebound.solver import solve_plm


@pytest.fixture(scope="module")
def square_solution(get_domain):
    return solve_plm(get_domain("square", 128), 1.0, 2.0)


def test_zero_level_row(square_solution):
    s = square_solution
    prof = profile(s, 200)
    assert prof.mu[0] == pytest.approx(1.0, rel=2e-2)
    assert prof.m[0] == pytest.approx(s.lam, rel=1e-8)
    assert prof.e[0] == pytest.approx(2 * s.lam**2 * s.energy, rel=2e-2)
    assert prof.residual[0] == pytest.approx(zero_level_value(s.alpha, s.lam, s.p, s.energy), abs=1e-10)


def test_monotone_and_vanishing(square_solution):
    prof = profile(square_solution, 200)
    for arr in (prof.mu, prof.m, prof.e):
        assert np.all(np.diff(arr) <= 0)
        assert arr[-1] < 1e-2 * arr[0]
    assert np.all(np.diff(prof.t) > 0)
    assert prof.t[-1] < square_solution.theta


def test_square_inequality(square_solution):
    s = square_solution
    assert check_integrated_inequality(profile(s, 200), s.alpha, s.lam, s.p) <= 1e-2


def test_zero_level_matches_energy_margin(square_solution):
    s = square_solution
    margin = check_energy_theorem(s)[0].margin
    # the t = 0 value is -lam/(p+1) times the margin of the energy identity bound
    assert zero_level_value(s.alpha, s.lam, s.p, s.energy) == pytest.approx(-s.lam / (s.p + 1) * margin, abs=1e-12)


def test_energy_flux_consistency(square_solution):
    assert energy_flux_consistency(profile(square_solution, 200)) <= 0.05


def test_grid_matches_radial_profile(get_domain):
    s = solve_plm(get_domain("disk", 256), 1.0, 2.0)
    grid = profile(s, 200)
    rad = profile_radial(solve_disk_radial(1.0, 2.0), 200)
    for a, b in ((grid.mu, rad.mu), (grid.m, rad.m), (grid.e, rad.e)):
        assert np.abs(a - b).max() <= 2e-2 * b.max()


@pytest.mark.parametrize("p, lam", [(1.0, 2.0), (2.0, 1.0), (3.0, 0.5), (2.0, 8.0)])
def test_radial_equality_tightens(p, lam):
    sol = solve_disk_radial(lam, p)
    worst = []
    for n in (200, 400):
        res = profile_radial(sol, n).residual
        assert -1e-3 <= res.min() and res.max() <= 1e-3
        worst.append(np.abs(res).max())
    assert worst[1] < worst[0]


def test_disk_grid_residual_shrinks(get_domain):
    vals = [
        abs(check_integrated_inequality(profile(s, 200), s.alpha, s.lam, s.p))
        for s in (solve_plm(get_domain("disk", n), 1.0, 2.0) for n in (64, 128, 256))
    ]
    assert vals[2] < vals[0]


def test_lambda_zero_rejected(get_domain):
    with pytest.raises(ValueError):
        profile(solve_plm(get_domain("square", 32), 0.0, 2.0))


def test_csv(tmp_path, square_solution):
    prof = profile(square_solution, 20)
    path = tmp_path / "p.csv"
    prof.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,mu,m,e,residual"
    assert len(lines) == 21
