"""Free-energy minimization over unit-mass densities.

    J(rho) = p/(p+1) int rho^(1+1/p) - lam/2 int rho G[rho]

is minimized over ``{rho >= 0, int rho = 1}`` by projected gradient descent.
Inner products are weighted by the control volumes, so the gradient is
``rho^(1/p) - lam G[rho]``.

Steps are taken in the metric scaled by ``D = p rho^(1 - 1/p)``, the inverse
curvature of the first term. Without it the curvature blows up where
``rho -> 0`` and the iteration crawls once the support is partial. The
projection in the scaled metric is ``(y - tau D)_+``; the termination test
uses the unscaled projected gradient.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import Domain
from .elliptic import ScalarField, green_operator
from .errors import ConvergenceError

SUPPORT_TOL = 1e-12
SCALE_FLOOR = 1e-10


@dataclass
class Density:
    grid: object
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if np.any(self.values < 0):
            raise ValueError("density must be non-negative")

    @property
    def mass(self) -> float:
        return float(self.grid.weights @ self.values)

    @classmethod
    def uniform(cls, domain: Domain) -> Density:
        w = domain.grid.weights
        return cls(domain.grid, np.full(w.size, 1.0 / w.sum()))


@dataclass
class VariationalResult:
    lam: float
    p: float
    density: Density
    alpha: float
    J: float
    residual: float
    iterations: int
    psi: ScalarField | None = field(default=None, repr=False)
    history: list = field(default_factory=list, repr=False)
    objective_history: list = field(default_factory=list, repr=False)

    def header(self) -> dict:
        return {"lambda": self.lam, "p": self.p, "alpha": self.alpha, "J": self.J, "residual": self.residual}


def project_simplex(y: np.ndarray, w: np.ndarray, mass: float = 1.0) -> np.ndarray:
    """Weighted-L2 projection onto ``{rho >= 0, sum w rho = mass}``: ``(y - tau)_+``."""
    order = np.argsort(-y)
    ys, ws = y[order], w[order]
    cw = np.cumsum(ws)
    cwy = np.cumsum(ws * ys)
    # with the top k entries active, tau_k = (cwy_k - mass) / cw_k; pick the largest consistent k
    tau = (cwy - mass) / cw
    ok = ys > tau
    k = np.flatnonzero(ok)[-1]
    return np.clip(y - tau[k], 0.0, None)


def project_scaled(y: np.ndarray, w: np.ndarray, d: np.ndarray, mass: float = 1.0) -> np.ndarray:
    """Projection in the metric ``w / d``: ``(y - tau d)_+`` with ``sum w rho = mass``."""
    r = y / d
    order = np.argsort(-r)
    ys, ds, ws = y[order], d[order], w[order]
    tau = (np.cumsum(ws * ys) - mass) / np.cumsum(ws * ds)
    k = np.flatnonzero(r[order] > tau)[-1]
    return np.clip(y - tau[k] * d, 0.0, None)


def _objective(g, rho, lam, p):
    W = g.weights
    psi = g(rho)
    J = p / (p + 1.0) * float(W @ rho ** (1.0 + 1.0 / p)) - 0.5 * lam * float(W @ (rho * psi))
    return J, psi


def free_energy(domain: Domain, rho, lam: float, p: float) -> float:
    rho = rho.values if isinstance(rho, Density) else np.asarray(rho, dtype=float)
    return _objective(green_operator(domain), rho, lam, p)[0]


def minimize_J(
    domain: Domain,
    lam: float,
    p: float,
    tol: float = 1e-6,
    max_iter: int = 100_000,
    rho0: Density | None = None,
) -> VariationalResult:
    """Scaled projected gradient with Barzilai-Borwein steps and Armijo backtracking."""
    g = green_operator(domain)
    W = g.weights
    rho = (rho0 or Density.uniform(domain)).values.copy()
    J, psi = _objective(g, rho, lam, p)
    grad = rho ** (1.0 / p) - lam * psi
    step = 1.0
    history = []
    objective = [J]
    prev = None
    for it in range(max_iter + 1):
        pg = rho - project_simplex(rho - grad, W)
        res = float(np.sqrt(W @ pg**2))
        history.append(res)
        if res <= tol:
            break
        if it == max_iter:
            raise ConvergenceError(f"projected gradient stalled at residual {res:.3e}", history)
        scale = p * np.maximum(rho, SCALE_FLOOR) ** (1.0 - 1.0 / p)
        if prev is not None:
            s, y = rho - prev[0], grad - prev[1]
            sy = float(W @ (s * y))
            step = float(W @ (s * s / scale)) / sy if sy > 0 else 1.0
            step = min(max(step, 1e-10), 1e10)
        t = step
        while True:
            trial = project_scaled(rho - t * scale * grad, W, scale)
            J_new, psi_new = _objective(g, trial, lam, p)
            if J_new <= J + 1e-4 * float(W @ (grad * (trial - rho))) or t < 1e-14:
                break
            t *= 0.5
        prev = (rho, grad)
        rho, J, psi = trial, J_new, psi_new
        objective.append(J)
        grad = rho ** (1.0 / p) - lam * psi
    support = rho > SUPPORT_TOL
    stat = rho ** (1.0 / p) - lam * psi
    alpha = float(np.sum((W * rho * stat)[support]) / np.sum((W * rho)[support]))
    return VariationalResult(
        lam, p, Density(g.grid, rho), alpha, J, res, it, ScalarField(g.grid, psi), history, objective
    )


def positivity_threshold(domain: Domain, p: float, bracket: tuple[float, float], tol: float = 0.05) -> float:
    """Bisect on the sign of the extracted multiplier."""
    lo, hi = bracket
    a_lo = minimize_J(domain, lo, p).alpha
    a_hi = minimize_J(domain, hi, p).alpha
    if not (a_lo > 0 > a_hi):
        raise ValueError(
            f"bracket [{lo}, {hi}] gives multipliers {a_lo:.3e}, {a_hi:.3e}; widen the scan"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if minimize_J(domain, mid, p).alpha > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
