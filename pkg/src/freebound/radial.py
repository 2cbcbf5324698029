"""High-accuracy radial solutions on the unit-area disk.

With ``v = alpha + lam * psi`` the problem on the disk of radius
``R = 1/sqrt(pi)`` reduces to

    v'' + v'/r = -lam * v^p,   v'(0) = 0,   v(0) = A,

and the boundary condition ``psi(R) = 0`` reads ``alpha = v(R)``. The shooting
parameter is the peak value ``A``; an outer root-find on ``A`` enforces the
unit mass ``2 pi int_0^R v^p r dr = 1``. The mass is increasing in ``A`` and
``alpha(A)`` changes sign exactly once, which gives a clean bracket.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import NegativeAlphaRegime, RadialShootingError

R_DISK = 1.0 / math.sqrt(math.pi)
MASS_SLACK = 1e-9


def _rhs(lam, p):
    def f(r, y):
        v, dv = y[0], y[1]
        vp = max(v, 0.0) ** p
        if r == 0.0:
            d2 = -0.5 * lam * vp
        else:
            d2 = -lam * vp - dv / r
        return [dv, d2, vp * r, dv * dv * r]

    return f


def _shoot(A, lam, p, tol, R=R_DISK):
    sol = solve_ivp(
        _rhs(lam, p),
        (0.0, R),
        [A, 0.0, 0.0, 0.0],
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3 * max(A, 1e-300),
        dense_output=True,
    )
    if not sol.success:
        raise RadialShootingError(f"ODE integration failed for A={A:.6g}: {sol.message}", trajectory=sol)
    return sol


@dataclass
class RadialSolution:
    """Radial solution of the density problem on the unit-area disk."""

    lam: float
    p: float
    alpha: float
    peak: float
    ode_tol: float
    _sol: object = field(default=None, repr=False)
    R: float = R_DISK
    domain_tag: str = "disk"

    @property
    def is_trivial(self) -> bool:
        return self.lam == 0.0

    def _y(self, r):
        return self._sol.sol(np.asarray(r, dtype=float))

    def v(self, r):
        if self.is_trivial:
            return np.ones_like(np.asarray(r, dtype=float))
        return self._y(r)[0]

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        if self.is_trivial:
            return 0.25 * (self.R**2 - r * r)
        return (self._y(r)[0] - self.alpha) / self.lam

    def dpsi(self, r):
        r = np.asarray(r, dtype=float)
        if self.is_trivial:
            return -0.5 * r
        return self._y(r)[1] / self.lam

    def u(self, r):
        return self.lam * self.psi(r)

    @property
    def theta(self) -> float:
        return self.peak - self.alpha if not self.is_trivial else 0.0

    @property
    def psi_max(self) -> float:
        return float(self.psi(0.0))

    @property
    def energy(self) -> float:
        if self.is_trivial:
            return 1.0 / (16.0 * math.pi)
        return math.pi * float(self._y(self.R)[3]) / self.lam**2

    @property
    def mass(self) -> float:
        if self.is_trivial:
            return 1.0
        return 2.0 * math.pi * float(self._y(self.R)[2])

    @property
    def mass_residual(self) -> float:
        return abs(self.mass - 1.0)

    def flux_mass(self, r):
        """``lam * int_{|x|<r} v^p``, i.e. the level-set mass ``m`` at radius ``r``."""
        return 2.0 * math.pi * self.lam * self._y(r)[2]

    def radius_at_level(self, t: float) -> float:
        """Radius where ``u = lam * psi`` equals ``t`` (``u`` decreases in ``r``)."""
        if t <= 0.0:
            return self.R
        if t >= self.theta:
            return 0.0
        return brentq(lambda r: float(self.u(r)) - t, 0.0, self.R, xtol=1e-15, rtol=1e-14)

    def sample(self, grid) -> np.ndarray:
        """``psi`` evaluated at the nodes of a grid centred on the disk."""
        r = np.hypot(grid.x - grid.origin[0], grid.y - grid.origin[1])
        return self.psi(np.minimum(r, self.R))


def solve_disk_radial(lam: float, p: float, tol: float = 1e-10, bracket=None) -> RadialSolution:
    """Solve the unit-area disk problem by shooting in the peak value.

    ``bracket`` optionally gives ``(A_lo, A_hi)`` for the peak value; by
    default it is found by doubling. Raises :class:`NegativeAlphaRegime`
    when no solution with ``alpha >= 0`` exists (``lam`` beyond the
    positivity threshold).
    """
    if lam < 0 or p < 1:
        raise ValueError("need lam >= 0 and p >= 1")
    if lam == 0.0:
        return RadialSolution(lam=0.0, p=p, alpha=1.0, peak=1.0, ode_tol=tol)

    cache = {}

    def run(A):
        if A not in cache:
            cache[A] = _shoot(A, lam, p, tol)
        return cache[A]

    def alpha_of(A):
        return float(run(A).y[0, -1])

    def mass_of(A):
        return 2.0 * math.pi * float(run(A).y[2, -1])

    if p == 1.0:
        if alpha_of(1.0) < 0.0:
            raise NegativeAlphaRegime(f"lam={lam} exceeds the first eigenvalue", alpha=alpha_of(1.0) / mass_of(1.0))
        A_max = math.inf
    else:
        lo, hi = 0.0, 1.0
        while alpha_of(hi) > 0.0:
            lo, hi = hi, 2.0 * hi
            if hi > 1e12:
                raise RadialShootingError("could not bracket alpha(A) = 0")
        A_max = brentq(alpha_of, max(lo, 1e-300) if lo > 0 else hi * 1e-6, hi, xtol=1e-15 * hi, rtol=1e-15)
        m_max = mass_of(A_max)
        if m_max < 1.0 - MASS_SLACK:
            raise NegativeAlphaRegime(
                f"lam={lam} exceeds the positivity threshold for p={p}",
                alpha=None,
            )
        if m_max <= 1.0:
            # at the threshold to within the ODE tolerance: the alpha = 0 solution
            return RadialSolution(lam=lam, p=p, alpha=0.0, peak=A_max, ode_tol=tol, _sol=run(A_max))

    if bracket is None:
        lo = 1e-3
        while mass_of(lo) > 1.0:
            lo *= 0.5
        hi = min(1.0, A_max)
        while mass_of(hi) < 1.0:
            lo, hi = hi, min(2.0 * hi, A_max)
            if hi > 1e12:
                raise RadialShootingError("could not bracket the unit-mass condition")
            if hi == A_max and mass_of(hi) < 1.0:
                raise NegativeAlphaRegime(f"lam={lam} exceeds the positivity threshold", alpha=0.0)
    else:
        lo, hi = bracket
    A = brentq(lambda a: mass_of(a) - 1.0, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    sol = run(A)
    alpha = alpha_of(A)
    if alpha < 0.0 and alpha > -1e-12:
        alpha = 0.0
    return RadialSolution(lam=lam, p=p, alpha=alpha, peak=A, ode_tol=tol, _sol=sol)


def lane_emden(p: float, tol: float = 1e-12):
    """First zero ``r0`` and slope ``w'(r0)`` of ``w'' + w'/r = -w^p``, ``w(0) = 1``."""
    ev = lambda r, y: y[0]
    ev.terminal = True
    ev.direction = -1
    sol = solve_ivp(
        lambda r, y: [y[1], -max(y[0], 0.0) ** p * (0.5 if r == 0 else 1.0) - (y[1] / r if r else 0.0)],
        (0.0, 100.0),
        [1.0, 0.0],
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3,
        events=ev,
    )
    if not sol.t_events[0].size:
        raise RadialShootingError("Lane-Emden profile has no zero on [0, 100]", trajectory=sol)
    return float(sol.t_events[0][0]), float(sol.y_events[0][0][1])


def disk_threshold(p: float) -> float:
    """``lam`` at which the disk solution has ``alpha = 0``, from the Lane-Emden profile.

    Scaling ``v(r) = A w(sqrt(lam) A^((p-1)/2) r)`` turns ``v(R) = 0`` and the
    unit mass into ``lam^(p/(p-1)) = 2 pi^(p/(p-1)) r0^((p+1)/(p-1)) |w'(r0)|``.
    For ``p = 1`` this is the first Dirichlet eigenvalue ``pi j0^2``.
    """
    r0, dw0 = lane_emden(p)
    if p == 1.0:
        return math.pi * r0 * r0
    rhs = 2.0 * math.pi ** (p / (p - 1.0)) * r0 ** ((p + 1.0) / (p - 1.0)) * abs(dw0)
    return rhs ** ((p - 1.0) / p)
