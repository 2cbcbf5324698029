"""Grid solver for the density problem and the map to the free boundary problem.

The unknowns are the constant ``alpha`` and the stream function ``psi`` with

    -Delta psi = (alpha + lam psi)^p in Omega,  psi = 0 on the boundary,
    int (alpha + lam psi)^p = 1.

The default path runs an outer root-find on ``alpha`` over a damped Picard
inner solve at fixed ``alpha``. Picard from ``psi = 0`` follows the minimal
branch at fixed ``alpha``, which ends at a fold below the positivity threshold
for ``p > 1`` and degenerates at the first eigenvalue for ``p = 1``. When the
outer bracket cannot be formed the solver switches to Newton continuation in
``lam`` on the bordered system for ``(psi, alpha)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from .domain import Domain
from .elliptic import GreenOperator, ScalarField, dirichlet_energy, green_operator
from .errors import ConvergenceError, NegativeAlphaRegime, PicardDivergence



@dataclass
class SolveOptions:
    omega: float = 1.0
    min_omega: float = 1.0 / 16.0
    inner_tol: float = 1e-9
    mass_tol: float = 1e-8
    max_inner: int = 5000
    growth_limit: int = 50
    scan_points: int = 33
    method: str = "auto"  # auto | picard | newton
    newton_tol: float = 1e-12
    # signed alpha down to -negative_alpha_tol is returned as a discretization-level zero
    negative_alpha_tol: float = 1e-2


@dataclass
class PlasmaSolution:
    domain: Domain
    lam: float
    p: float
    alpha: float
    psi: ScalarField
    method: str = "picard"
    outer_samples: list = field(default_factory=list, repr=False)
    monotone: bool = True

    @property
    def grid(self):
        return self.domain.grid

    @property
    def density(self) -> np.ndarray:
        return np.clip(self.alpha + self.lam * self.psi.values, 0.0, None) ** self.p

    @property
    def u(self) -> ScalarField:
        return ScalarField(self.grid, self.lam * self.psi.values)

    @property
    def theta(self) -> float:
        return self.lam * self.psi.max()

    @property
    def energy(self) -> float:
        return dirichlet_energy(self.psi, self.density, self.grid)

    @property
    def mass(self) -> float:
        return float(self.grid.weights @ self.density)

    @property
    def mass_residual(self) -> float:
        return abs(self.mass - 1.0)

    @property
    def pde_residual(self) -> float:
        """Relative max-norm residual of ``-Delta_h psi = density``."""
        g = green_operator(self.domain)
        f = self.density
        return float(np.abs(g.laplacian(self.psi) - f).max() / max(np.abs(f).max(), 1e-300))

    def header(self) -> dict:
        return {
            "lambda": self.lam,
            "p": self.p,
            "alpha": self.alpha,
            "theta": self.theta,
            "energy": self.energy,
            "mass_residual": self.mass_residual,
            "pde_residual": self.pde_residual,
        }


@dataclass
class FreeBoundarySolution:
    """Solution of the prescribed-current problem; ``v`` equals ``gamma`` on the boundary."""

    I: float
    gamma: float
    v: ScalarField
    p: float
    domain: Domain

    @property
    def current(self) -> float:
        """``int (v)_+^p``, equal to the boundary flux by the divergence theorem."""
        return float(self.domain.grid.weights @ np.clip(self.v.values, 0.0, None) ** self.p)


# ---------------------------------------------------------------- Picard

def _picard(g: GreenOperator, lam, p, alpha, psi0, opts: SolveOptions):
    """Fixed-``alpha`` inner solve; halves ``omega`` on divergence."""
    omega = opts.omega
    while True:
        psi = psi0.copy()
        prev = math.inf
        growth = 0
        history = []
        ok = False
        for _ in range(opts.max_inner):
            new = g(np.clip(alpha + lam * psi, 0.0, None) ** p)
            upd = float(np.abs(new - psi).max() / max(np.abs(new).max(), 1e-300))
            history.append(upd)
            psi = (1.0 - omega) * psi + omega * new
            if not np.isfinite(upd) or psi.max() > 1e8:
                break
            if upd <= opts.inner_tol:
                ok = True
                break
            growth = growth + 1 if upd > prev else 0
            if growth >= opts.growth_limit:
                break
            prev = upd
            k = len(history)
            if k > 100 and k % 50 == 0 and upd < history[k - 51]:
                rate = (upd / history[k - 51]) ** (1.0 / 50)
                needed = math.log(opts.inner_tol / upd) / math.log(rate)
                if needed > opts.max_inner - k:
                    # contraction too weak; damping only slows it further
                    raise PicardDivergence(
                        f"Picard contraction rate {rate:.6f} too slow at alpha={alpha:.6g}, lam={lam:.6g}",
                        history,
                    )
        if ok:
            return psi
        if omega / 2 < opts.min_omega:
            raise PicardDivergence(
                f"Picard iteration diverged at alpha={alpha:.6g}, lam={lam:.6g}; "
                "try a smaller damping factor or a smaller lambda",
                history,
            )
        omega /= 2


def _outer_picard(domain, g, lam, p, opts):
    """Root-find on ``alpha`` in [0, 1]; ``None`` when no bracket is available."""
    weights = g.weights
    cache: dict[float, np.ndarray] = {}
    samples: list[tuple[float, float]] = []

    def warm(alpha):
        # the minimal branch increases with alpha, so a start from below stays under it
        below = [a for a in cache if a <= alpha]
        return cache[max(below)].copy() if below else np.zeros(g.size)

    def mass(alpha):
        psi = _picard(g, lam, p, alpha, warm(alpha), opts)
        cache[alpha] = psi
        m = float(weights @ np.clip(alpha + lam * psi, 0.0, None) ** p)
        samples.append((alpha, m))
        return m - 1.0

    def safe(alpha):
        try:
            return mass(alpha)
        except PicardDivergence:
            return None

    lo, hi = 0.0, 1.0
    f_lo, f_hi = safe(lo), safe(hi)
    if f_lo is not None and f_lo > 0:
        raise NegativeAlphaRegime("no solution with alpha >= 0 on this branch (M(0) > 1)", alpha=None)
    if f_lo is None or f_hi is None or f_hi < 0:
        # full scan: first sign change among converged points
        grid_a = np.linspace(0.0, 1.0, opts.scan_points)
        prev_a, prev_f = None, None
        found = False
        for a in grid_a:
            fa = safe(float(a))
            if fa is None:
                break
            if prev_f is not None and prev_f < 0 <= fa:
                lo, hi, found = prev_a, float(a), True
                break
            prev_a, prev_f = float(a), fa
        if not found:
            return None, samples
    alpha = brentq(mass, lo, hi, xtol=1e-14, rtol=1e-14)
    psi = cache[alpha]
    return (alpha, psi), samples


def _is_monotone(samples) -> bool:
    s = sorted(samples)
    return all(b[1] > a[1] for a, b in zip(s, s[1:]) if b[0] > a[0])


# ---------------------------------------------------------------- Newton

def _bordered_solve(K, D, c, r, corner, F, Fm):
    n = K.shape[0]
    J = sp.bmat(
        [
            [K - sp.diags(D), sp.csc_matrix(c.reshape(-1, 1))],
            [sp.csr_matrix(r.reshape(1, -1)), sp.csr_matrix([[corner]])],
        ],
        format="csc",
    )
    dx = spsolve(J, -np.concatenate([F, [Fm]]))
    return dx[:n], float(dx[n])


def _newton_alpha(g, lam, p, psi, alpha, tol, max_iter=30):
    """Newton on ``K psi = W v_+^p, sum W v_+^p = 1`` with ``v = alpha + lam psi``."""
    W, K = g.weights, g.K
    for _ in range(max_iter):
        v = alpha + lam * psi
        vp = np.clip(v, 0.0, None)
        f = vp**p
        F = K @ psi - W * f
        Fm = float(W @ f) - 1.0
        scale = max(float(np.abs(W * f).max()), 1e-300)
        if np.abs(F).max() <= tol * scale and abs(Fm) <= tol:
            return psi, alpha
        dp = p * vp ** (p - 1.0) if p != 1.0 else (v > 0).astype(float)
        Wd = W * dp
        dpsi, dalpha = _bordered_solve(K, lam * Wd, -Wd, lam * Wd, float(Wd.sum()), F, Fm)
        if not (np.all(np.isfinite(dpsi)) and math.isfinite(dalpha)):
            break
        psi = psi + dpsi
        alpha = alpha + dalpha
    raise ConvergenceError(f"Newton did not converge at lam={lam:.6g}")


def _newton_continuation(g, lam, p, tol, psi0=None, alpha0=None, lam0=0.0):
    """Continue the bordered Newton solve from ``lam0`` (default: the torsion solution)."""
    if psi0 is None:
        psi0, alpha0, lam0 = g(np.ones(g.size)), 1.0, 0.0
    path = [(lam0, psi0, alpha0)]
    step = min(lam - lam0, 1.0)
    cur = lam0
    while cur < lam:
        nxt = min(cur + step, lam)
        if len(path) >= 2:
            (l1, p1, a1), (l2, p2, a2) = path[-2], path[-1]
            s = (nxt - l2) / (l2 - l1)
            guess = (p2 + s * (p2 - p1), a2 + s * (a2 - a1))
        else:
            guess = (path[-1][1], path[-1][2])
        try:
            psi, alpha = _newton_alpha(g, nxt, p, guess[0], guess[1], tol)
        except ConvergenceError:
            step /= 2
            if step < 1e-6:
                raise
            continue
        path.append((nxt, psi, alpha))
        cur = nxt
        step *= 1.5
    return path[-1][1], path[-1][2]


# ---------------------------------------------------------------- driver

def solve_plm(domain: Domain, lam: float, p: float, opts: SolveOptions | None = None) -> PlasmaSolution:
    """Solve for ``(alpha, psi)`` at the given ``lam`` and ``p``.

    Raises :class:`NegativeAlphaRegime` when the solution branch has
    ``alpha < 0`` at this ``lam``.
    """
    if lam < 0 or p < 1:
        raise ValueError("need lam >= 0 and p >= 1")
    opts = opts or SolveOptions()
    g = green_operator(domain)
    if lam == 0.0:
        psi = g(np.ones(g.size))
        return PlasmaSolution(domain, 0.0, p, 1.0, ScalarField(domain.grid, psi), method="direct")

    samples: list = []
    result = None
    if opts.method in ("auto", "picard"):
        result, samples = _outer_picard(domain, g, lam, p, opts)
        if result is None and opts.method == "picard":
            raise NegativeAlphaRegime(
                "outer iteration could not bracket alpha in [0, 1]; alpha < 0 regime or beyond the fold",
                alpha=None,
            )
    method = "picard"
    if result is not None:
        alpha, psi = result
        # polish the unit-mass condition when Brent stopped on the inner tolerance floor
        mass = float(g.weights @ np.clip(alpha + lam * psi, 0.0, None) ** p)
        if abs(mass - 1.0) > opts.mass_tol:
            psi, alpha = _newton_alpha(g, lam, p, psi, alpha, opts.newton_tol)
            method = "picard+newton"
    else:
        psi, alpha = _newton_continuation(g, lam, p, opts.newton_tol)
        method = "newton"
    if alpha < -opts.negative_alpha_tol:
        raise NegativeAlphaRegime(f"alpha = {alpha:.3e} < 0 at lam={lam:.6g}, p={p:g}", alpha=alpha)
    return PlasmaSolution(
        domain,
        lam,
        p,
        alpha,
        ScalarField(domain.grid, psi),
        method=method,
        outer_samples=sorted(samples),
        monotone=_is_monotone(samples),
    )


def solve_alpha_zero(domain: Domain, p: float, tol: float = 1e-12) -> PlasmaSolution:
    """The solution with ``alpha = 0``: ``lam`` is an unknown, found from the Sobolev ground state.

    With ``K w = Lambda W w^p`` and ``S = sum W w^p`` the scaling ``psi = w / (Lambda S)``
    solves the problem at ``lam = Lambda S^((p-1)/p)``. A bordered Newton step in
    ``(psi, lam)`` then removes the inverse-iteration error.
    """
    from .sobolev import best_constant

    g = green_operator(domain)
    res = best_constant(domain, p + 1.0)
    w = res.w.values
    W, K = g.weights, g.K
    S = float(W @ w**p)
    lam = res.Lambda * S ** ((p - 1.0) / p)
    psi = w / (res.Lambda * S)
    for _ in range(30):
        v = lam * psi
        f = np.clip(v, 0.0, None) ** p
        F = K @ psi - W * f
        Fm = float(W @ f) - 1.0
        if np.abs(F).max() <= tol * np.abs(W * f).max() and abs(Fm) <= tol:
            break
        dp = p * np.clip(v, 0.0, None) ** (p - 1.0)
        Wd = W * dp
        dpsi, dlam = _bordered_solve(K, lam * Wd, -Wd * psi, lam * Wd, float(Wd @ psi), F, Fm)
        psi, lam = psi + dpsi, lam + dlam
    else:
        raise ConvergenceError("alpha = 0 Newton polish did not converge")
    return PlasmaSolution(domain, float(lam), p, 0.0, ScalarField(domain.grid, psi), method="ground-state")


# ---------------------------------------------------------------- duality

def to_free_boundary(sol: PlasmaSolution) -> FreeBoundarySolution:
    p, lam = sol.p, sol.lam
    if p == 1.0:
        raise ValueError("the map to the free boundary problem is undefined for p = 1")
    if lam <= 0:
        raise ValueError("the map to the free boundary problem needs lam > 0")
    q = p / (p - 1.0)
    c = lam ** (1.0 / (p - 1.0))
    v = ScalarField(sol.grid, c * (sol.alpha + lam * sol.psi.values))
    return FreeBoundarySolution(I=lam**q, gamma=c * sol.alpha, v=v, p=p, domain=sol.domain)


def from_free_boundary(fb: FreeBoundarySolution) -> PlasmaSolution:
    p, I = fb.p, fb.I
    if p <= 1.0 or I <= 0:
        raise ValueError("need p > 1 and I > 0")
    if fb.gamma < 0:
        raise ValueError(f"gamma = {fb.gamma:.3e} < 0: only non-negative boundary values map back")
    q = p / (p - 1.0)
    alpha = I ** (-1.0 / p) * fb.gamma
    psi = ScalarField(fb.domain.grid, (fb.v.values - fb.gamma) / I)
    return PlasmaSolution(fb.domain, I ** (1.0 / q), p, alpha, psi, method="dual")
