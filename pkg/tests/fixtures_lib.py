"""Deterministic problem fixtures shared by the test modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from splitcert.admm import AdmmProblem
from splitcert.catalog import box, box_halfspace, halfspace, indicator, quadratic
from splitcert.rates import paper_constants


def spd(rng, n, lo, hi):
    """Random symmetric matrix with eigenvalues drawn from ``U(lo, hi)``."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    P = Q @ np.diag(rng.uniform(lo, hi, n)) @ Q.T
    return 0.5 * (P + P.T)


@dataclass
class SmoothDrs:
    f: object
    g: object
    beta: float
    gamma: float
    xstar: np.ndarray
    zstar: np.ndarray
    z0: np.ndarray


def smooth_drs_fixture(n: int = 200, seed: int = 0) -> SmoothDrs:
    """Halfspace indicator plus an ill-conditioned quadratic.

    ``g(x) = x^T P x / 2`` with eigenvalues ``(i/n)^2`` (so ``beta = 1``),
    ``f`` the indicator of ``{a^T x >= 1}``. The minimizer is
    ``x* = P^{-1} a / (a^T P^{-1} a)`` and ``z* = x* + gamma P x*``.
    """
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    ev = (np.arange(1, n + 1) / n) ** 2
    P = (Q * ev) @ Q.T
    P = 0.5 * (P + P.T)
    a = rng.standard_normal(n)
    z0 = rng.standard_normal(n)
    g = quadratic(P)
    f = indicator(halfspace(-a, -1.0))
    gamma = 0.9 * paper_constants().kappa * g.beta
    xs = np.linalg.solve(P, a)
    xs /= a @ xs
    zs = xs + gamma * P @ xs
    return SmoothDrs(f, g, g.beta, gamma, xs, zs, z0)


@dataclass
class QuadPair:
    f: object
    g: object
    xstar: np.ndarray
    gamma: float

    def zstar(self, gamma=None):
        gamma = self.gamma if gamma is None else gamma
        return self.xstar + gamma * self.g.grad(self.xstar)


def quad_pair(seed: int, n: int = 8, f_range=(0.5, 3.0), g_range=(0.5, 3.0), gamma: float = 1.0,
              f_rank: int | None = None, g_rank: int | None = None) -> QuadPair:
    """Quadratics ``f, g`` with prescribed spectra; ``*_rank`` zeroes trailing eigenvalues.

    A rank-deficient quadratic keeps its Lipschitz gradient but loses strong
    convexity, which lets one fixture satisfy exactly one regularity case.
    """
    rng = np.random.default_rng(seed)

    def mat(rng_, lohi, rank):
        Q, _ = np.linalg.qr(rng_.standard_normal((n, n)))
        ev = rng_.uniform(lohi[0], lohi[1], n)
        if rank is not None:
            ev[rank:] = 0.0
        P = (Q * ev) @ Q.T
        return 0.5 * (P + P.T)

    Pf, Pg = mat(rng, f_range, f_rank), mat(rng, g_range, g_rank)
    qf, qg = rng.standard_normal(n), rng.standard_normal(n)
    f, g = quadratic(Pf, qf), quadratic(Pg, qg)
    xs = np.linalg.solve(Pf + Pg, -(qf + qg))
    return QuadPair(f, g, xs, gamma)


def admm_fixture(seed: int = 1, d: int = 4, n1: int = 6, n2: int = 5,
                 lo: float = 0.5, hi: float = 3.0) -> AdmmProblem:
    """Strongly convex quadratic ADMM instance ``min f(x) + g(y), Ax + By = b``."""
    rng = np.random.default_rng(seed)
    Pf, Pg = spd(rng, n1, lo, hi), spd(rng, n2, lo, hi)
    f = quadratic(Pf, rng.standard_normal(n1))
    g = quadratic(Pg, rng.standard_normal(n2))
    A = rng.standard_normal((d, n1))
    B = rng.standard_normal((d, n2))
    b = rng.standard_normal(d)
    return AdmmProblem(f, g, A, B, b)


# Box and halfspace on separate coordinates: the intersection is a product,
# so d_int^2 = d_box^2 + d_half^2 <= 2 max(d_box, d_half)^2 on B(0, BIG).
BIG = 1e6


def box_halfspace_fixture(n: int = 4):
    """``(Cf, Cg, intersection, mu)`` with ``mu = sqrt(2)`` exactly.

    ``Cf`` clamps the first ``n - 1`` coordinates to ``[-1, 1]`` (the last
    coordinate lies in ``[-BIG, BIG]``); ``Cg = {x_n <= 0}``.
    """
    lo = np.r_[-np.ones(n - 1), -BIG]
    hi = np.r_[np.ones(n - 1), BIG]
    e = np.zeros(n)
    e[-1] = 1.0
    Cf = box(lo, hi)
    Cg = halfspace(e, 0.0)
    inter = box_halfspace(lo, hi, e, 0.0)
    return Cf, Cg, inter, float(np.sqrt(2.0))


def dykstra(projections, x, iters: int = 5000):
    """Dykstra's alternating projection onto an intersection (test oracle)."""
    x = np.asarray(x, dtype=float).copy()
    incs = [np.zeros_like(x) for _ in projections]
    for _ in range(iters):
        for i, P in enumerate(projections):
            y = P(x + incs[i])
            incs[i] = x + incs[i] - y
            x = y
    return x
