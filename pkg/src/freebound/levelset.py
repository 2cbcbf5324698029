"""Distribution functions of ``u = lam psi`` over its super-level sets.

For ``Omega(t) = {u > t}``:

    mu(t) = |Omega(t)|,  m(t) = lam int_{Omega(t)} (alpha + u)^p,  e(t) = int_{Omega(t)} |grad u|^2,

with ``mu(0) = 1``, ``m(0) = lam``, ``e(0) = 2 lam^2 E`` and ``-e' = m``. The
isoperimetric argument bounds

    -m^2/(8 pi) - lam/(p+1) (alpha+t)^(p+1) mu + (alpha+t) m/(p+1) + e/(p+1) <= 0,

with equality at every level on the disk.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .radial import RadialSolution


@dataclass
class LevelSetProfile:
    t: np.ndarray
    mu: np.ndarray
    m: np.ndarray
    e: np.ndarray
    lam: float
    p: float
    alpha: float
    source: str = "grid"

    @property
    def residual(self) -> np.ndarray:
        return inequality_residual(self, self.alpha, self.lam, self.p)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mu", "m", "e", "residual"])
            for row in zip(self.t, self.mu, self.m, self.e, self.residual):
                w.writerow([f"{x:.12g}" for x in row])


def _levels(theta: float, n_levels: int) -> np.ndarray:
    if n_levels < 2:
        raise ValueError("need at least two levels")
    return np.linspace(0.0, theta * (1.0 - 1e-6), n_levels)


def _tail_sum(x: np.ndarray, w: np.ndarray, t: np.ndarray):
    """``sum_{x > t} w`` and ``sum_{x > t} w x`` for every level ``t``."""
    order = np.argsort(-x)
    xs = x[order]
    cw = np.concatenate([[0.0], np.cumsum(w[order])])
    cwx = np.concatenate([[0.0], np.cumsum((w * x)[order])])
    k = np.searchsorted(-xs, -t, side="left")
    return cw[k], cwx[k]


def edge_energy(grid, u: np.ndarray, t: np.ndarray) -> np.ndarray:
    """``int_{u > t} |grad u|^2`` with each edge counted by the part of its range above ``t``.

    An edge of conductance ``c`` joining values ``lo < hi`` contributes
    ``c (hi - lo) (hi - max(lo, t))_+``. At ``t = 0`` this is ``u^T K u``, and
    ``-de/dt`` is the net flux out of ``{u > t}``, so the co-area relation
    ``-e' = m`` holds exactly whenever ``K u = lam W rho``.
    """
    lo, hi, c = [], [], []
    for d in range(4):
        k = grid.nbr[:, d]
        inner = k > np.arange(k.size)  # each interior edge once
        a, b = u[inner], u[k[inner]]
        lo.append(np.minimum(a, b))
        hi.append(np.maximum(a, b))
        c.append(np.ones(a.size))
        bd = k < 0
        lo.append(np.zeros(bd.sum()))
        hi.append(np.maximum(u[bd], 0.0))
        c.append(grid.h / grid.arms[bd, d])
    lo, hi, c = np.concatenate(lo), np.concatenate(hi), np.concatenate(c)
    w = c * (hi - lo)
    b_hi, a_hi = _tail_sum(hi, w, t)
    b_lo, a_lo = _tail_sum(lo, w, t)
    # (hi - max(lo, t))_+ = (hi - t)_+ - (lo - t)_+
    return (a_hi - t * b_hi) - (a_lo - t * b_lo)


def profile(sol, n_levels: int = 200) -> LevelSetProfile:
    """Profile of a grid solution (or a radial one, dispatched to :func:`profile_radial`)."""
    if isinstance(sol, RadialSolution):
        return profile_radial(sol, n_levels)
    if sol.lam == 0:
        raise ValueError("the level-set profile is trivial at lam = 0")
    grid = sol.grid
    u = sol.u.values
    W = grid.weights
    rho = sol.density
    t = _levels(float(u.max()), n_levels)
    # sort once and accumulate from the top so each level is a prefix sum
    order = np.argsort(-u)
    us = u[order]
    cmu = np.concatenate([[0.0], np.cumsum(W[order])])
    cm = np.concatenate([[0.0], np.cumsum((W * rho)[order])])
    k = np.searchsorted(-us, -t, side="left")  # count of nodes with u > t
    e = edge_energy(grid, u, t)
    return LevelSetProfile(t, cmu[k], sol.lam * cm[k], e, sol.lam, sol.p, sol.alpha, "grid")


def profile_radial(sol: RadialSolution, n_levels: int = 200) -> LevelSetProfile:
    """Profile of a radial solution, integrating over the level radii.

    ``mu`` is exact; ``m`` and ``e`` are trapezoid sums in ``r`` over the radii
    of the chosen levels (plus the centre), so the quadrature refines with
    ``n_levels``.
    """
    if sol.lam == 0:
        raise ValueError("the level-set profile is trivial at lam = 0")
    lam, p = sol.lam, sol.p
    t = _levels(sol.theta, n_levels)
    r = np.array([sol.radius_at_level(float(tk)) for tk in t])
    nodes = np.concatenate([r, [0.0]])  # decreasing radii
    v = sol.v(nodes)
    dv = lam * sol.dpsi(nodes)
    fm = 2.0 * math.pi * lam * np.clip(v, 0.0, None) ** p * nodes
    fe = 2.0 * math.pi * dv**2 * nodes
    dr = nodes[:-1] - nodes[1:]
    seg_m = 0.5 * (fm[:-1] + fm[1:]) * dr
    seg_e = 0.5 * (fe[:-1] + fe[1:]) * dr
    m = np.cumsum(seg_m[::-1])[::-1]
    e = np.cumsum(seg_e[::-1])[::-1]
    return LevelSetProfile(t, math.pi * r**2, m, e, lam, p, sol.alpha, "radial")


def inequality_residual(prof: LevelSetProfile, alpha: float, lam: float, p: float) -> np.ndarray:
    a = alpha + prof.t
    return (
        -prof.m**2 / (8.0 * math.pi)
        - lam / (p + 1.0) * a ** (p + 1.0) * prof.mu
        + a * prof.m / (p + 1.0)
        + prof.e / (p + 1.0)
    )


def check_integrated_inequality(prof: LevelSetProfile, alpha: float, lam: float, p: float) -> float:
    """Largest value of the level inequality's left side over all levels (``<= 0`` expected)."""
    return float(inequality_residual(prof, alpha, lam, p).max())


def zero_level_value(alpha: float, lam: float, p: float, energy: float) -> float:
    """The ``t = 0`` left side from ``(alpha, lam, p, E)`` alone."""
    return (
        -lam**2 / (8.0 * math.pi)
        - lam * alpha ** (p + 1.0) / (p + 1.0)
        + lam * alpha / (p + 1.0)
        + 2.0 * lam**2 * energy / (p + 1.0)
    )


def energy_flux_consistency(prof: LevelSetProfile) -> float:
    """Worst relative gap between ``e(0) - e(t)`` and ``int_0^t m``, scaled by ``e(0)``."""
    drop = prof.e[0] - prof.e
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (prof.m[1:] + prof.m[:-1]) * np.diff(prof.t))])
    return float(np.abs(drop - integral).max() / prof.e[0])
