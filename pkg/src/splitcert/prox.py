"""Proximal and projection calculus.

The two abstractions consumed by every solver in the package live here:
:class:`ProxFunction` (a closed convex function with a prox oracle and its
regularity constants) and :class:`ConvexSet` (a closed convex set with a
projection oracle). Concrete instances are built by :mod:`splitcert.catalog`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

__all__ = [
    "INF",
    "MEMBERSHIP_TOL",
    "ProxDomainError",
    "ConvexSet",
    "ProxFunction",
    "Subgradient",
    "as_vec",
    "prox_eval",
    "refl_eval",
    "extract_subgradient",
    "dist_sq_prox_coeffs",
    "s_term",
]

#: Sentinel returned by ``ProxFunction.eval`` outside the domain.
INF = math.inf

#: Absolute membership tolerance used by indicator functions.
MEMBERSHIP_TOL = 1e-9


class ProxDomainError(ValueError):
    """Raised when a prox oracle cannot produce a finite point."""


def as_vec(x: Any) -> np.ndarray:
    """Return ``x`` as a 1-D float array, rejecting non-finite entries."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


@dataclass(frozen=True)
class ConvexSet:
    """Closed convex set described by its projection oracle.

    Parameters
    ----------
    name : str
        Catalog kind, e.g. ``"halfspace"``.
    project_fn : callable
        Map ``x -> P_C(x)`` on 1-D float arrays.
    params : dict, optional
        JSON-compatible description used for serialization.
    """

    name: str
    project_fn: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict, compare=False)

    def project(self, x) -> np.ndarray:
        return self.project_fn(np.asarray(x, dtype=float))

    def distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.project_fn(x)))

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.distance(x) <= tol

    def __repr__(self) -> str:
        return f"ConvexSet({self.name!r})"


@dataclass(frozen=True)
class ProxFunction:
    """Closed proper convex function with a prox oracle.

    Parameters
    ----------
    name : str
        Catalog kind.
    eval_fn : callable
        ``x -> f(x)``; returns :data:`INF` outside the domain.
    prox_fn : callable
        ``(gamma, x) -> prox_{gamma f}(x)``.
    grad_fn : callable, optional
        Gradient, required whenever ``beta > 0``.
    mu : float
        Strong convexity modulus (0 when absent or unknown).
    beta : float
        Cocoercivity constant: the gradient is ``1/beta``-Lipschitz.
        0 when absent or unknown.
    params : dict, optional
        JSON-compatible description used for serialization.
    """

    name: str
    eval_fn: Callable[[np.ndarray], float]
    prox_fn: Callable[[float, np.ndarray], np.ndarray]
    grad_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    mu: float = 0.0
    beta: float = 0.0
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.mu < 0 or self.beta < 0:
            raise ValueError("mu and beta must be nonnegative")
        if self.beta > 0 and self.grad_fn is None:
            raise ValueError("beta > 0 requires a gradient")

    def __call__(self, x) -> float:
        return float(self.eval_fn(np.asarray(x, dtype=float)))

    def prox(self, gamma: float, x) -> np.ndarray:
        return self.prox_fn(float(gamma), np.asarray(x, dtype=float))

    def grad(self, x) -> np.ndarray:
        if self.grad_fn is None:
            raise ValueError(f"{self.name} has no gradient")
        return self.grad_fn(np.asarray(x, dtype=float))

    @property
    def smooth(self) -> bool:
        """True when the gradient is Lipschitz with a known constant."""
        return self.beta > 0

    def __repr__(self) -> str:
        return f"ProxFunction({self.name!r}, mu={self.mu:g}, beta={self.beta:g})"


@dataclass(frozen=True)
class Subgradient:
    """Subgradient recovered from a prox evaluation.

    ``vector = (x - at_point) / gamma_used`` with ``at_point`` the prox of
    ``x``; the vector lies in the subdifferential at ``at_point``.
    """

    vector: np.ndarray
    at_point: np.ndarray
    gamma_used: float


def prox_eval(fn: ProxFunction, gamma: float, x) -> np.ndarray:
    """Evaluate ``prox_{gamma fn}(x)``.

    Parameters
    ----------
    fn : ProxFunction
    gamma : float
        Positive stepsize.
    x : array_like

    Returns
    -------
    ndarray
        The unique minimizer of ``fn(y) + ||y - x||^2 / (2 gamma)``.

    Raises
    ------
    ProxDomainError
        If the oracle returns a non-finite point.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    x = as_vec(x)
    out = fn.prox(gamma, x)
    if out.shape != x.shape or not np.all(np.isfinite(out)):
        raise ProxDomainError(f"prox of {fn.name} produced no finite point")
    return out


def refl_eval(fn: ProxFunction, gamma: float, x) -> np.ndarray:
    """Reflection ``2 prox_{gamma fn}(x) - x``."""
    x = as_vec(x)
    return 2.0 * prox_eval(fn, gamma, x) - x


def extract_subgradient(fn: ProxFunction, gamma: float, x) -> Subgradient:
    """Subgradient of ``fn`` at ``prox_{gamma fn}(x)`` read off the prox residual."""
    x = as_vec(x)
    xp = prox_eval(fn, gamma, x)
    return Subgradient((x - xp) / gamma, xp, float(gamma))


def dist_sq_prox_coeffs(gamma: float) -> tuple[float, float]:
    """Weights of the prox of ``gamma * d_C^2``.

    ``prox_{gamma d_C^2}(x) = a * x + b * P_C(x)`` with
    ``a = 1/(2 gamma + 1)`` and ``b = 2 gamma/(2 gamma + 1)``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    d = 2.0 * gamma + 1.0
    return 1.0 / d, 2.0 * gamma / d


def s_term(fn: ProxFunction, x, y, gx=None, gy=None) -> float:
    """Regularity slack ``S_f(x, y)``.

    ``max(mu/2 ||x - y||^2, beta/2 ||g(x) - g(y)||^2)`` where ``gx`` and
    ``gy`` are subgradients at ``x`` and ``y``. When they are omitted and
    ``fn`` is smooth the gradient is used; a zero constant switches the
    corresponding branch off.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = 0.5 * fn.mu * float(np.sum((x - y) ** 2)) if fn.mu > 0 else 0.0
    b = 0.0
    if fn.beta > 0:
        gx = fn.grad(x) if gx is None else np.asarray(gx, dtype=float)
        gy = fn.grad(y) if gy is None else np.asarray(gy, dtype=float)
        b = 0.5 * fn.beta * float(np.sum((gx - gy) ** 2))
    return max(a, b)
