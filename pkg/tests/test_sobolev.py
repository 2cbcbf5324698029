import math

import numpy as np
import pytest

from freebound.sobolev import best_constant, lambda_star, lambda_star_from, rayleigh
from freebound.elliptic import green_operator
from tests.oracles import DISK_EIGENVALUE, DISK_SOBOLEV, DISK_THRESHOLD, SQUARE_EIGENVALUE


def test_square_eigenvalue(get_domain):
    assert best_constant(get_domain("square", 128), 2.0).Lambda == pytest.approx(SQUARE_EIGENVALUE, rel=1e-2)


def test_disk_eigenvalue(get_domain):
    assert best_constant(get_domain("disk", 128), 2.0).Lambda == pytest.approx(DISK_EIGENVALUE, rel=1e-2)


@pytest.mark.parametrize("s", [3.0, 4.0, 5.0])
def test_disk_higher_exponents(get_domain, s):
    assert best_constant(get_domain("disk", 128), s).Lambda == pytest.approx(DISK_SOBOLEV[int(s)], rel=1e-2)


@pytest.mark.parametrize("tag", ["disk", "square", "rectangle2"])
@pytest.mark.parametrize("s", [2.0, 3.0, 4.5])
def test_result_invariants(get_domain, tag, s):
    d = get_domain(tag, 48)
    g = green_operator(d)
    r = best_constant(d, s)
    w = r.w.values
    assert r.Lambda > 0
    assert np.all(w >= 0)
    assert float(g.weights @ w**s) == pytest.approx(1.0, rel=1e-12)
    assert rayleigh(g.K, g.weights, w, s) == pytest.approx(r.Lambda, rel=1e-6)
    hist = np.array(r.history)
    assert np.all(np.diff(hist) <= 1e-12 * hist[1:])
    assert r.residual < 1e-3


def test_lambda_star_p1_is_eigenvalue(get_domain):
    d = get_domain("square", 64)
    assert lambda_star(d, 1.0) == best_constant(d, 2.0).Lambda


def test_lambda_star_disk(get_domain):
    d = get_domain("disk", 128)
    assert lambda_star(d, 1.0) == pytest.approx(DISK_EIGENVALUE, rel=1e-2)
    assert lambda_star(d, 2.0) == pytest.approx(DISK_THRESHOLD[2], rel=1e-2)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_isoperimetric_ordering(get_domain, p):
    disk = lambda_star(get_domain("disk", 96), p)
    for tag in ("square", "rectangle2"):
        assert lambda_star(get_domain(tag, 96), p) > disk


@pytest.mark.parametrize("p", [2, 3, 4])
def test_formula_on_disk_oracle(p):
    # the threshold and the best constant of the disk satisfy the formula with equality
    assert lambda_star_from(DISK_SOBOLEV[p + 1], p) == pytest.approx(DISK_THRESHOLD[p], rel=1e-9)


def test_rejects_small_exponent(get_domain):
    with pytest.raises(ValueError):
        best_constant(get_domain("square", 32), 1.5)
