"""Deterministic benchmark instances, including the LP self-dual embedding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np
import scipy.linalg as sla

from .admm import AdmmProblem
from .catalog import (
    affine_subspace,
    halfspace,
    l1_norm,
    line_through_origin,
    point_set,
    quadratic,
)
from .feasibility import FeasibilityProblem
from .prox import ConvexSet, as_vec

__all__ = [
    "PROBLEM_KINDS",
    "GeneratedProblem",
    "generate_problem",
    "HsdeInstance",
    "HsdeVerdict",
    "NotInIntersectionError",
    "hsde_instance",
    "random_lp",
    "hsde_extract",
    "lp_kkt_residuals",
    "friedrichs_cosine",
]

PROBLEM_KINDS = (
    "random-strongly-convex-quadratic-pair",
    "lasso-like",
    "two-subspaces",
    "halfspace-pair",
    "parallel-lines-infeasible",
    "m-random-halfspaces",
    "lp-hsde",
)


@dataclass
class GeneratedProblem:
    """A generated instance.

    Attributes
    ----------
    kind : str
    seed : int
    dims : dict
    objects : dict
        Solver-ready objects (``f``, ``g``, ``Cf``, ``Cg``, ``problem``, ...).
    descriptor : dict
        JSON-compatible description that :func:`generate_problem` (or the
        catalog) can rebuild the instance from.
    truth : dict
        Known reference data (fixed points, gap vectors, cosines).
    """

    kind: str
    seed: int
    dims: dict
    objects: dict
    descriptor: dict
    truth: dict = field(default_factory=dict)


def _spd(rng, n: int, lo: float, hi: float) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    P = Q @ np.diag(rng.uniform(lo, hi, n)) @ Q.T
    return 0.5 * (P + P.T)


def friedrichs_cosine(U: np.ndarray, V: np.ndarray) -> float:
    """Cosine of the Friedrichs angle between ``range(U)`` and ``range(V)``.

    The largest principal cosine strictly below 1, after discarding the
    directions common to both subspaces.
    """
    c = np.cos(sla.subspace_angles(U, V))
    c = c[c < 1.0 - 1e-10]
    return float(c.max()) if c.size else 0.0


def _dims(dims: Optional[dict], **defaults) -> dict:
    out = dict(defaults)
    out.update(dims or {})
    return out


def generate_problem(kind: str, seed: int = 0, dims: Optional[dict] = None) -> GeneratedProblem:
    """Build a deterministic instance of one of :data:`PROBLEM_KINDS`.

    Parameters
    ----------
    kind : str
    seed : int
        Seed of ``numpy.random.default_rng``.
    dims : dict, optional
        Size and shape parameters; per kind:

        * ``random-strongly-convex-quadratic-pair``: ``n`` (10), ``mu`` (0.5),
          ``L`` (4.0), ``d`` (ADMM rows, ``n``).
        * ``lasso-like``: ``n`` (20), ``m`` (30 samples), ``weight`` (0.1).
        * ``two-subspaces``: ``n`` (2), ``friedrichs_cos`` (0.5).
        * ``halfspace-pair``: ``n`` (10).
        * ``parallel-lines-infeasible``: ``offset`` (1.0).
        * ``m-random-halfspaces``: ``n`` (5), ``m`` (3).
        * ``lp-hsde``: ``m`` (10), ``n`` (20), ``feasible`` (True).

    Returns
    -------
    GeneratedProblem

    Examples
    --------
    >>> p = generate_problem("two-subspaces", 0, {"friedrichs_cos": 0.5})
    >>> round(p.truth["friedrichs_cos"], 12)
    0.5
    """
    if kind not in PROBLEM_KINDS:
        raise ValueError(f"unknown problem kind {kind!r}; choose from {PROBLEM_KINDS}")
    if int(seed) < 0:
        raise ValueError("seed must be nonnegative")
    rng = np.random.default_rng(int(seed))
    return _GENERATORS[kind](rng, int(seed), dims or {})


def _quad_pair(rng, seed, dims):
    d = _dims(dims, n=10, mu=0.5, L=4.0)
    n = int(d["n"])
    d.setdefault("d", n)
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < d["mu"] <= d["L"]:
        raise ValueError("need 0 < mu <= L")
    Pf, Pg = _spd(rng, n, d["mu"], d["L"]), _spd(rng, n, d["mu"], d["L"])
    qf, qg = rng.standard_normal(n), rng.standard_normal(n)
    rows = int(d["d"])
    A = rng.standard_normal((rows, n))
    B = rng.standard_normal((rows, n))
    b = rng.standard_normal(rows)
    f, g = quadratic(Pf, qf), quadratic(Pg, qg)
    xstar = np.linalg.solve(Pf + Pg, -(qf + qg))
    desc = {"f": f.params, "g": g.params, "A": A.tolist(), "B": B.tolist(), "b": b.tolist()}
    return GeneratedProblem("random-strongly-convex-quadratic-pair", seed, d,
                            {"f": f, "g": g, "admm": AdmmProblem(f, g, A, B, b)}, desc,
                            {"xstar": xstar.tolist()})


def _lasso(rng, seed, dims):
    d = _dims(dims, n=20, m=30, weight=0.1)
    n, m = int(d["n"]), int(d["m"])
    M = rng.standard_normal((m, n)) / math.sqrt(m)
    xtrue = np.where(rng.random(n) < 0.3, rng.standard_normal(n), 0.0)
    c = M @ xtrue + 0.01 * rng.standard_normal(m)
    f = quadratic(M.T @ M, -M.T @ c)
    g = l1_norm(float(d["weight"]))
    I = np.eye(n)
    desc = {"f": f.params, "g": g.params, "A": I.tolist(), "B": (-I).tolist(), "b": [0.0] * n}
    return GeneratedProblem("lasso-like", seed, d,
                            {"f": f, "g": g, "admm": AdmmProblem(f, g, I, -I, np.zeros(n)),
                             "M": M, "c": c}, desc, {"xtrue": xtrue.tolist()})


def _two_subspaces(rng, seed, dims):
    d = _dims(dims, n=2, friedrichs_cos=0.5)
    n, cF = int(d["n"]), float(d["friedrichs_cos"])
    if n < 2 or not 0.0 <= cF < 1.0:
        raise ValueError("need n >= 2 and 0 <= friedrichs_cos < 1")
    theta = math.acos(cF)
    if n == 2:
        Q = np.eye(2)
    else:
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    u = Q[:, 0]
    v = math.cos(theta) * Q[:, 0] + math.sin(theta) * Q[:, 1]
    Cf, Cg = line_through_origin(u), line_through_origin(v)
    inter = point_set(np.zeros(n))
    desc = {"Cf": Cf.params, "Cg": Cg.params, "intersection": inter.params,
            "friedrichs_cos": cF}
    return GeneratedProblem("two-subspaces", seed, d,
                            {"Cf": Cf, "Cg": Cg, "intersection": inter}, desc,
                            {"friedrichs_cos": friedrichs_cosine(u[:, None], v[:, None]),
                             "theta": theta, "map_factor": cF ** 2})


def _halfspace_pair(rng, seed, dims):
    d = _dims(dims, n=10)
    n = int(d["n"])
    a1, a2 = rng.standard_normal(n), rng.standard_normal(n)
    p = rng.standard_normal(n)
    # p lies strictly inside both halfspaces, so the intersection has interior
    Cf = halfspace(a1, float(a1 @ p) + 1.0)
    Cg = halfspace(a2, float(a2 @ p) + 1.0)
    # start outside both halfspaces so the first steps are nontrivial
    u = a1 / np.linalg.norm(a1) + a2 / np.linalg.norm(a2)
    z0 = p + 5.0 * rng.standard_normal(n) + 20.0 * u
    desc = {"Cf": Cf.params, "Cg": Cg.params, "z0": z0.tolist()}
    return GeneratedProblem("halfspace-pair", seed, d, {"Cf": Cf, "Cg": Cg, "z0": z0}, desc,
                            {"interior_point": p.tolist()})


def _parallel_lines(rng, seed, dims):
    d = _dims(dims, offset=1.0)
    off = float(d["offset"])
    Cf = affine_subspace([[0.0, 1.0]], [0.0])
    Cg = affine_subspace([[0.0, 1.0]], [off])
    z0 = rng.standard_normal(2) * 3.0
    desc = {"Cf": Cf.params, "Cg": Cg.params, "z0": z0.tolist()}
    return GeneratedProblem("parallel-lines-infeasible", seed, d, {"Cf": Cf, "Cg": Cg, "z0": z0},
                            desc, {"gap_vector": [0.0, off], "gap_norm": abs(off)})


def _m_halfspaces(rng, seed, dims):
    d = _dims(dims, n=5, m=3)
    n, m = int(d["n"]), int(d["m"])
    if m < 2:
        raise ValueError("m must be at least 2")
    p = rng.standard_normal(n)
    sets = []
    for _ in range(m):
        a = rng.standard_normal(n)
        sets.append(halfspace(a, float(a @ p) + 0.5))
    x0 = p + 5.0 * rng.standard_normal(n)
    desc = {"sets": [C.params for C in sets], "x0": x0.tolist()}
    return GeneratedProblem("m-random-halfspaces", seed, d,
                            {"problem": FeasibilityProblem(sets), "x0": x0}, desc,
                            {"interior_point": p.tolist()})


# ------------------------------------------------------------------- HSDE


@dataclass
class HsdeInstance:
    """LP ``min c^T x  s.t.  Ax + s = b, s >= 0`` and its self-dual embedding.

    ``u = (x, y, tau)``, ``v = (r, s, kappa)``, ``Q u = v`` with
    ``Q = [[0, A^T, c], [-A, 0, b], [-c^T, -b^T, 0]]``.
    ``C_f = (R^n x R^m_+ x R_+) x ({0}^n x R^m_+ x R_+)`` and
    ``C_g = {(u, v): Q u = v}``; points of ``R^{2N}`` are ``(u, v)`` stacked.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    Q: np.ndarray = field(init=False)
    Cf: ConvexSet = field(init=False)
    Cg: ConvexSet = field(init=False)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        m, n = self.A.shape
        self.b = np.asarray(self.b, dtype=float).reshape(m)
        self.c = np.asarray(self.c, dtype=float).reshape(n)
        N = n + m + 1
        Q = np.zeros((N, N))
        Q[:n, n:n + m] = self.A.T
        Q[:n, -1] = self.c
        Q[n:n + m, :n] = -self.A
        Q[n:n + m, -1] = self.b
        Q[-1, :n] = -self.c
        Q[-1, n:n + m] = -self.b
        self.Q = Q
        self.Cf = _cone_set(n, m)
        self.Cg = _graph_set(Q)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def split(self, z) -> dict:
        """Named blocks of a stacked point ``(u, v)``."""
        m, n = self.A.shape
        z = as_vec(z)
        N = n + m + 1
        u, v = z[:N], z[N:]
        return {"x": u[:n], "y": u[n:n + m], "tau": float(u[-1]),
                "r": v[:n], "s": v[n:n + m], "kappa": float(v[-1])}

    def start(self) -> np.ndarray:
        """Starting point with ``tau = kappa = 1`` and zero elsewhere."""
        m, n = self.A.shape
        N = n + m + 1
        z = np.zeros(2 * N)
        z[N - 1] = 1.0
        z[-1] = 1.0
        return z

    def residual(self, z) -> float:
        """``max(d_Cf, d_Cg)`` at ``z``."""
        return max(self.Cf.distance(z), self.Cg.distance(z))


def _cone_set(n: int, m: int) -> ConvexSet:
    N = n + m + 1

    def proj(z):
        out = np.array(z, dtype=float)
        out[n:N] = np.maximum(out[n:N], 0.0)          # y, tau
        out[N:N + n] = 0.0                             # r
        out[N + n:] = np.maximum(out[N + n:], 0.0)     # s, kappa
        return out

    return ConvexSet("hsde-cone", proj, {"kind": "hsde-cone", "n": n, "m": m})


def _graph_set(Q: np.ndarray) -> ConvexSet:
    N = Q.shape[0]
    fac = sla.cho_factor(np.eye(N) + Q.T @ Q)

    def proj(z):
        u, v = z[:N], z[N:]
        u1 = sla.cho_solve(fac, u + Q.T @ v)
        return np.concatenate([u1, Q @ u1])

    return ConvexSet("hsde-graph", proj, {"kind": "hsde-graph", "N": N})


def hsde_instance(A, b, c) -> HsdeInstance:
    return HsdeInstance(A, b, c)


def random_lp(rng, m: int, n: int, feasible: bool = True):
    """Random LP data with a known status.

    Feasible: a complementary optimal pair ``(x0, s0, y0)`` is planted, so
    ``b = A x0 + s0`` and ``c = -A^T y0``. Infeasible: ``y0 >= 0`` with
    ``A^T y0 = 0`` and ``b^T y0 < 0`` certifies primal infeasibility.
    """
    A = rng.standard_normal((m, n))
    if feasible:
        x0 = rng.standard_normal(n)
        mask = rng.random(m) < 0.5
        s0 = np.where(mask, rng.uniform(0.5, 2.0, m), 0.0)
        y0 = np.where(mask, 0.0, rng.uniform(0.5, 2.0, m))
        b = A @ x0 + s0
        c = -A.T @ y0
        return A, b, c, {"x": x0, "s": s0, "y": y0}
    y0 = rng.uniform(0.5, 2.0, m)
    A = A - np.outer(y0, y0 @ A) / (y0 @ y0)
    b = rng.standard_normal(m)
    b = b - (b @ y0 + 1.0) * y0 / (y0 @ y0)
    c = rng.standard_normal(n)
    return A, b, c, {"y": y0}


def _lp_hsde(rng, seed, dims):
    d = _dims(dims, m=10, n=20, feasible=True)
    m, n = int(d["m"]), int(d["n"])
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    A, b, c, planted = random_lp(rng, m, n, bool(d["feasible"]))
    inst = HsdeInstance(A, b, c)
    desc = {"A": A.tolist(), "b": b.tolist(), "c": c.tolist(), "feasible": bool(d["feasible"])}
    truth = {k: v.tolist() for k, v in planted.items()}
    if d["feasible"]:
        truth["optimal_value"] = float(c @ planted["x"])
    return GeneratedProblem("lp-hsde", seed, d, {"hsde": inst, "z0": inst.start()}, desc, truth)


_GENERATORS = {
    "random-strongly-convex-quadratic-pair": _quad_pair,
    "lasso-like": _lasso,
    "two-subspaces": _two_subspaces,
    "halfspace-pair": _halfspace_pair,
    "parallel-lines-infeasible": _parallel_lines,
    "m-random-halfspaces": _m_halfspaces,
    "lp-hsde": _lp_hsde,
}


class NotInIntersectionError(ValueError):
    """The point is farther than ``tol`` from ``C_f`` or ``C_g``."""


@dataclass
class HsdeVerdict:
    """Outcome of the embedding trichotomy.

    ``status`` is ``"primal-dual-solution"``, ``"infeasibility-certificate"``
    or ``"inconclusive"``; ``x, y, s`` are set for solutions;
    ``primal_infeasible`` / ``dual_infeasible`` flag which certificate holds.
    """

    status: str
    tau: float
    kappa: float
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    primal_infeasible: bool = False
    dual_infeasible: bool = False
    bty: float = math.nan
    ctx: float = math.nan


def hsde_extract(inst: HsdeInstance, z, tol: float = 1e-6) -> HsdeVerdict:
    """Classify an (approximate) embedding solution.

    The point is first normalized to ``||(u, v)|| = 1``; ``tau``, ``kappa``
    are compared with ``tol`` and the residual ``max(d_Cf, d_Cg)`` must not
    exceed ``tol``.

    Raises
    ------
    NotInIntersectionError
    """
    z = as_vec(z)
    nrm = float(np.linalg.norm(z))
    if nrm == 0.0:
        return HsdeVerdict("inconclusive", 0.0, 0.0)
    z = z / nrm
    res = inst.residual(z)
    if res > tol:
        raise NotInIntersectionError(f"residual {res:.3e} exceeds tol {tol:.1e}")
    p = inst.split(z)
    tau, kappa = p["tau"], p["kappa"]
    if tau > tol and kappa <= tol:
        return HsdeVerdict("primal-dual-solution", tau, kappa, p["x"] / tau, p["y"] / tau, p["s"] / tau)
    if tau <= tol and kappa > tol:
        bty = float(inst.b @ p["y"])
        ctx = float(inst.c @ p["x"])
        return HsdeVerdict("infeasibility-certificate", tau, kappa, primal_infeasible=bty < 0,
                           dual_infeasible=ctx < 0, bty=bty, ctx=ctx)
    return HsdeVerdict("inconclusive", tau, kappa)


def lp_kkt_residuals(inst: HsdeInstance, x, y, s) -> dict:
    """Primal, dual, cone and gap residuals of an LP primal-dual candidate."""
    A, b, c = inst.A, inst.b, inst.c
    x, y, s = as_vec(x), as_vec(y), as_vec(s)
    return {
        "primal": float(np.linalg.norm(A @ x + s - b)),
        "dual": float(np.linalg.norm(A.T @ y + c)),
        "cone": float(max(0.0, -s.min(), -y.min())),
        "gap": float(abs(c @ x + b @ y)),
    }
