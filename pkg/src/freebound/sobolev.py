"""Best Sobolev constants and the explicit positivity threshold."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import Domain
from .elliptic import ScalarField, green_operator
from .errors import ConvergenceError


@dataclass
class SobolevResult:
    s: float
    Lambda: float
    w: ScalarField
    residual: float
    iterations: int
    history: list = field(default_factory=list, repr=False)

    def to_dict(self, p: float | None = None) -> dict:
        d = {"s": self.s, "Lambda": self.Lambda, "iterations": self.iterations, "residual": self.residual}
        if p is not None:
            d["lambda_star"] = lambda_star_from(self.Lambda, p)
        return d


def _norm(W, w, s):
    return float(W @ np.abs(w) ** s) ** (1.0 / s)


def rayleigh(K, W, w, s) -> float:
    """``int |grad w|^2 / (int |w|^s)^(2/s)`` with the discrete Dirichlet form."""
    return float(w @ (K @ w)) / _norm(W, w, s) ** 2


def best_constant(domain: Domain, s: float, rel_tol: float = 1e-9, max_iter: int = 10_000) -> SobolevResult:
    """Inverse iteration ``w <- G[w^(s-1)]`` normalized in ``L^s``, from the torsion function.

    The quotient must not increase from step to step; a rise beyond round-off
    is reported as an error since it means the iteration left the ground state.
    """
    if s < 2:
        raise ValueError("s must be >= 2")
    g = green_operator(domain)
    K, W = g.K, g.weights
    w = g(np.ones(g.size))
    w /= _norm(W, w, s)
    R = rayleigh(K, W, w, s)
    history = [R]
    for it in range(1, max_iter + 1):
        w = g(w ** (s - 1.0))
        w /= _norm(W, w, s)
        R_new = rayleigh(K, W, w, s)
        history.append(R_new)
        if R_new > R * (1 + 1e-12):
            raise ConvergenceError(f"Rayleigh quotient increased at step {it}", history)
        if abs(R - R_new) <= rel_tol * R_new:
            # residual of the Euler-Lagrange equation K w = Lambda W w^(s-1)
            res = K @ w - R_new * W * w ** (s - 1.0)
            resid = float(np.linalg.norm(res) / np.linalg.norm(K @ w))
            return SobolevResult(s, R_new, ScalarField(domain.grid, w), resid, it, history)
        R = R_new
    raise ConvergenceError(f"inverse iteration stagnated after {max_iter} steps", history)


def lambda_star_from(Lambda: float, p: float) -> float:
    """``((8 pi/(p+1))^(p-1) Lambda^(p+1))^(1/(2p))``."""
    return ((8.0 * math.pi / (p + 1.0)) ** (p - 1.0) * Lambda ** (p + 1.0)) ** (1.0 / (2.0 * p))


def lambda_star(domain: Domain, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    return lambda_star_from(best_constant(domain, p + 1.0).Lambda, p)
