"""Closed-form functions and sets.

Every constructor returns an immutable :class:`~splitcert.prox.ProxFunction`
or :class:`~splitcert.prox.ConvexSet` whose ``params`` field is a
JSON-compatible descriptor; :func:`catalog_make` inverts that mapping.

Function kinds: ``quadratic``, ``scaled-norm-squared``, ``l1``, ``zero``,
``indicator-of-set``, ``squared-distance-of-set``.

Set kinds: ``affine-subspace``, ``hyperplane``, ``halfspace``, ``box``,
``euclidean-ball``, ``nonneg-orthant``, ``line-through-origin``,
``diagonal-set``, plus ``subspace``, ``point``, ``whole-space``,
``box-halfspace`` and ``product``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .prox import INF, MEMBERSHIP_TOL, ConvexSet, ProxFunction, dist_sq_prox_coeffs

__all__ = [
    "quadratic",
    "scaled_norm_squared",
    "l1_norm",
    "zero_function",
    "indicator",
    "squared_distance",
    "affine_subspace",
    "hyperplane",
    "halfspace",
    "box",
    "euclidean_ball",
    "nonneg_orthant",
    "line_through_origin",
    "subspace",
    "diagonal_set",
    "point_set",
    "whole_space",
    "box_halfspace",
    "product_set",
    "catalog_make",
    "FUNCTION_KINDS",
    "SET_KINDS",
]


def _tolist(a):
    return np.asarray(a, dtype=float).tolist()


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------- functions


def quadratic(P, q=None) -> ProxFunction:
    """``f(x) = 1/2 x^T P x + q^T x`` with ``P`` symmetric positive semidefinite.

    The eigendecomposition of ``P`` is computed once, so the prox
    ``(I + gamma P)^{-1} (x - gamma q)`` costs two matrix-vector products
    for any ``gamma``.

    Raises
    ------
    ValueError
        If ``P`` is not square, not symmetric or has a negative eigenvalue.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[0]
    if P.shape != (n, n):
        raise ValueError("P must be square")
    scale = max(1.0, float(np.max(np.abs(P))) if P.size else 1.0)
    if np.max(np.abs(P - P.T)) > 1e-12 * scale:
        raise ValueError("P must be symmetric")
    P = 0.5 * (P + P.T)
    q = np.zeros(n) if q is None else np.asarray(q, dtype=float).reshape(n)
    w, V = np.linalg.eigh(P)
    wmax = max(float(w[-1]), 0.0)
    if w[0] < -1e-10 * max(1.0, wmax):
        raise ValueError(f"P is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    mu = float(w[0]) if w[0] > 1e-12 * max(1.0, wmax) else 0.0
    beta = 1.0 / wmax if wmax > 0 else 0.0
    P, q, w, V = _frozen(P), _frozen(q), _frozen(w), _frozen(V)

    def f(x):
        return 0.5 * float(x @ P @ x) + float(q @ x)

    def prox(gamma, x):
        return V @ ((V.T @ (x - gamma * q)) / (1.0 + gamma * w))

    def grad(x):
        return P @ x + q

    return ProxFunction("quadratic", f, prox, grad, mu=mu, beta=beta,
                        params={"kind": "quadratic", "P": _tolist(P), "q": _tolist(q)})


def scaled_norm_squared(c: float = 1.0) -> ProxFunction:
    """``f(x) = (c/2) ||x||^2`` with ``c > 0``."""
    c = float(c)
    if not c > 0:
        raise ValueError("c must be positive")
    return ProxFunction(
        "scaled-norm-squared",
        lambda x: 0.5 * c * float(x @ x),
        lambda gamma, x: x / (1.0 + gamma * c),
        lambda x: c * x,
        mu=c,
        beta=1.0 / c,
        params={"kind": "scaled-norm-squared", "c": c},
    )


def l1_norm(weight=1.0) -> ProxFunction:
    """``f(x) = sum_i w_i |x_i|``; the prox is soft thresholding."""
    w = np.asarray(weight, dtype=float)
    if np.any(w < 0):
        raise ValueError("l1 weight must be nonnegative")
    w = _frozen(w)

    def prox(gamma, x):
        t = gamma * w
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)

    return ProxFunction("l1", lambda x: float(np.sum(w * np.abs(x))), prox,
                        params={"kind": "l1", "weight": _tolist(w)})


def zero_function() -> ProxFunction:
    """The zero function; its prox is the identity."""
    return ProxFunction("zero", lambda x: 0.0, lambda gamma, x: x.copy(),
                        lambda x: np.zeros_like(x), params={"kind": "zero"})


def indicator(C: ConvexSet, tol: float = MEMBERSHIP_TOL) -> ProxFunction:
    """Indicator of ``C``: 0 on the set (to ``tol``), :data:`INF` elsewhere."""

    def f(x):
        return 0.0 if C.contains(x, tol) else INF

    return ProxFunction("indicator-of-set", f, lambda gamma, x: C.project(x),
                        params={"kind": "indicator-of-set", "set": C.params})


def squared_distance(C: ConvexSet, scale: float = 1.0) -> ProxFunction:
    """``f(x) = scale * d_C(x)^2``.

    The gradient ``2 scale (x - P_C x)`` is ``2 scale``-Lipschitz, so
    ``beta = 1/(2 scale)``.
    """
    s = float(scale)
    if not s > 0:
        raise ValueError("scale must be positive")

    def prox(gamma, x):
        a, b = dist_sq_prox_coeffs(gamma * s)
        return a * x + b * C.project(x)

    return ProxFunction(
        "squared-distance-of-set",
        lambda x: s * C.distance(x) ** 2,
        prox,
        lambda x: 2.0 * s * (x - C.project(x)),
        mu=0.0,
        beta=1.0 / (2.0 * s),
        params={"kind": "squared-distance-of-set", "set": C.params, "scale": s},
    )


# --------------------------------------------------------------------- sets


def affine_subspace(A, b) -> ConvexSet:
    """``{x : A x = b}``.

    Raises
    ------
    ValueError
        If the system is inconsistent.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(A.shape[0])
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    tol = max(A.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = int(np.sum(s > tol))
    U, s, Vt = U[:, :r], s[:r], Vt[:r]
    x0 = Vt.T @ ((U.T @ b) / s)
    if np.linalg.norm(A @ x0 - b) > 1e-9 * max(1.0, float(np.linalg.norm(b))):
        raise ValueError("inconsistent affine system")
    Vt, x0 = _frozen(Vt), _frozen(x0)

    def proj(x):
        return x - Vt.T @ (Vt @ (x - x0))

    return ConvexSet("affine-subspace", proj,
                     {"kind": "affine-subspace", "A": _tolist(A), "b": _tolist(b)})


def hyperplane(a, b: float) -> ConvexSet:
    """``{x : a^T x = b}``."""
    a = _frozen(np.asarray(a, dtype=float).ravel())
    aa = float(a @ a)
    if aa == 0:
        raise ValueError("normal vector must be nonzero")
    b = float(b)
    return ConvexSet("hyperplane", lambda x: x - ((a @ x - b) / aa) * a,
                     {"kind": "hyperplane", "a": _tolist(a), "b": b})


def halfspace(a, b: float) -> ConvexSet:
    """``{x : a^T x <= b}``."""
    a = _frozen(np.asarray(a, dtype=float).ravel())
    aa = float(a @ a)
    if aa == 0:
        raise ValueError("normal vector must be nonzero")
    b = float(b)

    def proj(x):
        v = float(a @ x) - b
        return x.copy() if v <= 0 else x - (v / aa) * a

    return ConvexSet("halfspace", proj, {"kind": "halfspace", "a": _tolist(a), "b": b})


def box(lo, hi) -> ConvexSet:
    """``{x : lo <= x <= hi}`` (componentwise)."""
    lo = _frozen(lo)
    hi = _frozen(hi)
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ValueError("box needs lo <= hi of equal shape")
    return ConvexSet("box", lambda x: np.clip(x, lo, hi),
                     {"kind": "box", "lo": _tolist(lo), "hi": _tolist(hi)})


def euclidean_ball(center, radius: float) -> ConvexSet:
    """Closed ball; points already inside are returned unchanged."""
    c = _frozen(np.asarray(center, dtype=float).ravel())
    r = float(radius)
    if r < 0:
        raise ValueError("radius must be nonnegative")

    def proj(x):
        d = x - c
        nd = float(np.linalg.norm(d))
        return x.copy() if nd <= r else c + (r / nd) * d

    return ConvexSet("euclidean-ball", proj,
                     {"kind": "euclidean-ball", "center": _tolist(c), "radius": r})


def nonneg_orthant() -> ConvexSet:
    return ConvexSet("nonneg-orthant", lambda x: np.maximum(x, 0.0),
                     {"kind": "nonneg-orthant"})


def line_through_origin(direction) -> ConvexSet:
    """``span{direction}``."""
    d = np.asarray(direction, dtype=float).ravel()
    nd = float(np.linalg.norm(d))
    if nd == 0:
        raise ValueError("direction must be nonzero")
    u = _frozen(d / nd)
    return ConvexSet("line-through-origin", lambda x: float(u @ x) * u,
                     {"kind": "line-through-origin", "direction": _tolist(d)})


def subspace(basis) -> ConvexSet:
    """Column span of ``basis`` (an ``n x r`` array)."""
    B = np.asarray(basis, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    Q = sla.orth(B)
    Q = _frozen(Q)
    return ConvexSet("subspace", lambda x: Q @ (Q.T @ x),
                     {"kind": "subspace", "basis": _tolist(B)})


def diagonal_set(m: int, n: int) -> ConvexSet:
    """``D = {(x, ..., x)} in R^{m n}``; the projection averages the blocks."""
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")

    def proj(x):
        return np.tile(x.reshape(m, n).mean(axis=0), m)

    return ConvexSet("diagonal-set", proj, {"kind": "diagonal-set", "m": m, "n": n})


def point_set(p) -> ConvexSet:
    """The singleton ``{p}``."""
    p = _frozen(np.asarray(p, dtype=float).ravel())
    return ConvexSet("point", lambda x: p.copy(), {"kind": "point", "p": _tolist(p)})


def whole_space() -> ConvexSet:
    return ConvexSet("whole-space", lambda x: x.copy(), {"kind": "whole-space"})


def box_halfspace(lo, hi, a, b: float) -> ConvexSet:
    """``{x : lo <= x <= hi, a^T x <= b}``.

    The projection is ``clip(x - t a, lo, hi)`` for the smallest ``t >= 0``
    making the halfspace constraint hold; ``t`` is found exactly by walking
    the sorted breakpoints of the piecewise-linear map ``t -> a^T clip(...)``.
    """
    lo = np.asarray(lo, dtype=float).ravel()
    hi = np.asarray(hi, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    b = float(b)
    if np.any(lo > hi) or not (lo.shape == hi.shape == a.shape):
        raise ValueError("bad box or normal")
    if float(np.sum(np.minimum(a * lo, a * hi))) > b:
        raise ValueError("box and halfspace do not intersect")
    lo, hi, a = _frozen(lo), _frozen(hi), _frozen(a)
    nz = a != 0

    def proj(x):
        y = np.clip(x, lo, hi)
        phi0 = float(a @ y)
        if phi0 <= b:
            return y
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = np.where(nz, (x - lo) / a, np.nan)
            t2 = np.where(nz, (x - hi) / a, np.nan)
        ts = np.concatenate([t1, t2])
        ts = np.unique(ts[np.isfinite(ts) & (ts > 0)])
        t_prev, phi_prev = 0.0, phi0
        for t in ts:
            phi = float(a @ np.clip(x - t * a, lo, hi))
            if phi <= b:
                tm = 0.5 * (t_prev + t)
                ym = x - tm * a
                free = (ym > lo) & (ym < hi)
                slope = float(a[free] @ a[free])
                tstar = t_prev + (phi_prev - b) / slope if slope > 0 else t
                return np.clip(x - tstar * a, lo, hi)
            t_prev, phi_prev = float(t), phi
        return np.clip(x - t_prev * a, lo, hi)

    return ConvexSet("box-halfspace", proj,
                     {"kind": "box-halfspace", "lo": _tolist(lo), "hi": _tolist(hi),
                      "a": _tolist(a), "b": b})


def product_set(sets: Sequence[ConvexSet], n: int) -> ConvexSet:
    """``C_1 x ... x C_m`` acting on ``m`` consecutive blocks of length ``n``."""
    sets = tuple(sets)
    m = len(sets)

    def proj(x):
        blocks = x.reshape(m, n)
        return np.concatenate([C.project(blocks[i]) for i, C in enumerate(sets)])

    return ConvexSet("product", proj,
                     {"kind": "product", "n": int(n), "sets": [C.params for C in sets]})


# ------------------------------------------------------------------ factory

FUNCTION_KINDS = (
    "quadratic", "scaled-norm-squared", "l1", "zero",
    "indicator-of-set", "squared-distance-of-set",
)
SET_KINDS = (
    "affine-subspace", "hyperplane", "halfspace", "box", "euclidean-ball",
    "nonneg-orthant", "line-through-origin", "diagonal-set",
    "subspace", "point", "whole-space", "box-halfspace", "product",
)


def catalog_make(kind: str, params: dict | None = None):
    """Build a catalog object from a JSON-compatible descriptor.

    Parameters
    ----------
    kind : str
        One of :data:`FUNCTION_KINDS` or :data:`SET_KINDS`.
    params : dict, optional
        Keyword fields of the descriptor; nested sets are descriptors
        themselves (``{"kind": ..., ...}``).

    Returns
    -------
    ProxFunction or ConvexSet

    Examples
    --------
    >>> C = catalog_make("affine-subspace", {"A": [[1, -1]], "b": [0]})
    >>> C.project([3.0, 1.0])
    array([2., 2.])
    """
    p = dict(params or {})
    p.pop("kind", None)

    def sub(d):
        d = dict(d)
        return catalog_make(d.pop("kind"), d)

    if kind == "quadratic":
        return quadratic(p["P"], p.get("q"))
    if kind == "scaled-norm-squared":
        return scaled_norm_squared(p.get("c", 1.0))
    if kind == "l1":
        return l1_norm(p.get("weight", 1.0))
    if kind == "zero":
        return zero_function()
    if kind == "indicator-of-set":
        return indicator(sub(p["set"]))
    if kind == "squared-distance-of-set":
        return squared_distance(sub(p["set"]), p.get("scale", 1.0))
    if kind == "affine-subspace":
        return affine_subspace(p["A"], p["b"])
    if kind == "hyperplane":
        return hyperplane(p["a"], p["b"])
    if kind == "halfspace":
        return halfspace(p["a"], p["b"])
    if kind == "box":
        return box(p["lo"], p["hi"])
    if kind == "euclidean-ball":
        return euclidean_ball(p["center"], p["radius"])
    if kind == "nonneg-orthant":
        return nonneg_orthant()
    if kind == "line-through-origin":
        return line_through_origin(p["direction"])
    if kind == "subspace":
        return subspace(p["basis"])
    if kind == "diagonal-set":
        return diagonal_set(p["m"], p["n"])
    if kind == "point":
        return point_set(p["p"])
    if kind == "whole-space":
        return whole_space()
    if kind == "box-halfspace":
        return box_halfspace(p["lo"], p["hi"], p["a"], p["b"])
    if kind == "product":
        return product_set([sub(d) for d in p["sets"]], p["n"])
    raise ValueError(f"unknown catalog kind {kind!r}")
