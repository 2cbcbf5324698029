import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freebound.sobolev import lambda_star
from freebound.solver import solve_plm
from freebound.variational import (
    Density,
    free_energy,
    minimize_J,
    positivity_threshold,
    project_scaled,
    project_simplex,
)
from tests.oracles import DISK_EIGENVALUE, DISK_THRESHOLD


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_uniform_energy_at_zero_lambda(get_domain, p):
    d = get_domain("square", 32)
    assert free_energy(d, Density.uniform(d), 0.0, p) == pytest.approx(p / (p + 1), abs=1e-13)


def test_uniform_energy_disk(get_domain):
    d = get_domain("disk", 128)
    val = free_energy(d, Density.uniform(d), 3.0, 2.0)
    assert val == pytest.approx(2 / 3 - 3 / (16 * math.pi), rel=1e-3)


def test_lambda_zero_minimizer(get_domain):
    r = minimize_J(get_domain("disk", 64), 0.0, 2.0)
    np.testing.assert_allclose(r.density.values, 1.0, atol=1e-12)
    assert r.alpha == pytest.approx(1.0, abs=1e-12)
    assert r.J == pytest.approx(2 / 3, abs=1e-8)


def test_matches_solver(get_domain):
    d = get_domain("disk", 128)
    r = minimize_J(d, 1.0, 2.0)
    s = solve_plm(d, 1.0, 2.0)
    assert abs(r.alpha - s.alpha) <= 1e-3
    assert np.abs(r.density.values - s.density).max() <= 1e-3


@pytest.mark.parametrize("tag", ["square", "rectangle2"])
@pytest.mark.parametrize("p, lam", [(1.0, 5.0), (2.0, 4.0), (3.0, 2.0)])
def test_result_invariants(get_domain, tag, p, lam):
    d = get_domain(tag, 48)
    r = minimize_J(d, lam, p)
    assert r.residual <= 1e-6
    assert r.density.mass == pytest.approx(1.0, abs=1e-10)
    assert np.all(r.density.values >= 0)
    assert r.J == pytest.approx(free_energy(d, r.density, lam, p), rel=1e-12)
    assert r.J <= free_energy(d, Density.uniform(d), lam, p)
    assert np.all(np.diff(r.objective_history) <= 1e-15)
    # first-order identity on the support
    rho = (r.alpha + lam * r.psi.values) ** p
    assert np.abs(rho - r.density.values).max() <= 1e-3


def test_objective_nonincreasing_in_lambda(get_domain):
    d = get_domain("square", 48)
    Js = [minimize_J(d, lam, 2.0).J for lam in (0.0, 2.0, 4.0, 8.0, 12.0)]
    assert all(a >= b for a, b in zip(Js, Js[1:]))


def test_negative_multiplier_above_threshold(get_domain):
    d = get_domain("square", 48)
    r = minimize_J(d, 1.1 * lambda_star(d, 2.0) * 1.05, 2.0)
    assert r.alpha < 0


def test_threshold_disk_p1(get_domain):
    lam = positivity_threshold(get_domain("disk", 64), 1.0, (15.0, 20.0), tol=0.01)
    assert lam == pytest.approx(DISK_EIGENVALUE, rel=2e-2)


def test_threshold_disk_p2(get_domain):
    d = get_domain("disk", 64)
    lam = positivity_threshold(d, 2.0, (11.0, 14.0), tol=0.01)
    assert lam == pytest.approx(lambda_star(d, 2.0), rel=2e-2)
    assert lam == pytest.approx(DISK_THRESHOLD[2], rel=2e-2)


def test_threshold_square_above_lambda_star(get_domain):
    d = get_domain("square", 64)
    ls = lambda_star(d, 2.0)
    assert positivity_threshold(d, 2.0, (0.9 * ls, 1.1 * ls), tol=1e-3 * ls) >= 0.98 * ls


def test_threshold_bad_bracket(get_domain):
    with pytest.raises(ValueError):
        positivity_threshold(get_domain("disk", 48), 2.0, (1.0, 2.0))


@settings(max_examples=60, deadline=None)
@given(
    y=st.lists(st.floats(-5, 5), min_size=1, max_size=40),
    seed=st.integers(0, 2**31 - 1),
    mass=st.floats(0.1, 10.0),
)
def test_projections_land_on_simplex(y, seed, mass):
    y = np.array(y)
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.1, 2.0, y.size)
    d = rng.uniform(0.1, 3.0, y.size)
    for x in (project_simplex(y, w, mass), project_scaled(y, w, d, mass)):
        assert np.all(x >= 0)
        assert float(w @ x) == pytest.approx(mass, rel=1e-9)
    # Euclidean optimality: any other feasible point is no closer
    x = project_simplex(y, w, mass)
    other = np.full(y.size, mass / w.sum())
    assert w @ (x - y) ** 2 <= w @ (other - y) ** 2 + 1e-9
