"""Convex feasibility by relaxed PRS on squared distance functions.

With ``f = d_{Cf}^2`` and ``g = d_{Cg}^2`` and per-iteration stepsizes
``gamma_f``, ``gamma_g`` one step reads::

    x_g = a_g z + (1 - a_g) P_Cg(z),                  a_g = 1/(2 gamma_g + 1)
    x_f = a_f r + (1 - a_f) P_Cf(r),  r = 2 x_g - z,  a_f = 1/(2 gamma_f + 1)
    z+  = z + 2 lam (x_f - x_g)

``gamma_f = gamma_g = 1/2`` and ``lam = 1`` give the method of alternating
projections ``z+ = P_Cf P_Cg z``.
"""

from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .catalog import diagonal_set, product_set
from .prox import ConvexSet, as_vec, dist_sq_prox_coeffs
from .schedules import RelaxationSchedule, StepsizePair
from .trace import InequalityMonitor, IterationTrace, TraceBuilder, best_transform, check_finite

__all__ = [
    "FeasibilityProblem",
    "GapDiagnostics",
    "feas_prs_step",
    "run_feasibility",
    "map_run",
    "map_infeasible_diagnostics",
    "multi_set_step",
    "run_multi_set",
    "averaged_map",
    "product_space_problem",
    "feas_contraction_constant",
    "map_strengthened_constant",
    "product_space_mu",
    "subspace_mu_bound",
    "default_radius",
    "estimate_mu_lower_bound",
]

FEAS_COLUMNS = ("d_Cf", "d_Cg", "d_int")


@dataclass(frozen=True)
class FeasibilityProblem:
    """Sets ``C_1, ..., C_m`` with optional regularity data.

    Parameters
    ----------
    sets : sequence of ConvexSet
        At least two sets. For two-set problems ``sets = (Cf, Cg)``.
    mu_rho : float, optional
        Declared linear-regularity constant: ``d_int(x) <= mu_rho max_i d_i(x)``
        on ``B(0, rho)``.
    rho : float, optional
        Radius of that ball.
    intersection : ConvexSet, optional
        Projector onto the intersection, needed for contraction checks.
    friedrichs_cos : float, optional
        Cosine of the Friedrichs angle for two-subspace problems.
    """

    sets: tuple
    mu_rho: Optional[float] = None
    rho: Optional[float] = None
    intersection: Optional[ConvexSet] = None
    friedrichs_cos: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(self.sets))
        if len(self.sets) < 2:
            raise ValueError("a feasibility problem needs at least two sets")
        if self.mu_rho is not None and self.mu_rho < 1:
            raise ValueError("mu_rho must be at least 1")

    @property
    def m(self) -> int:
        return len(self.sets)


@dataclass
class GapDiagnostics:
    """Infeasible-MAP diagnostics.

    Attributes
    ----------
    gap_vectors : ndarray
        ``P_Cg z^k - P_Cf P_Cg z^k`` for every recorded ``k`` (last row: the
        final iterate).
    gap_estimate : ndarray
        The last row, taken as the gap-vector estimate.
    gap_norms : ndarray
    best_error : ndarray
        ``min_{i<=k} ||(P_Cg z^i - P_Cf z^i) - gap_estimate||^2``.
    best_error_monotone : bool
    scaled_best_error : ndarray
        ``(k + 1) * best_error``; tends to 0 under the little-o rate.
    sum_terms, sum_partial : ndarray
        Terms and partial sums of the summable series built from the
        reference point ``x = (z_ref + P_Cg z_ref) / 2``.
    sum_bounded : bool
        Partial sums nondecreasing and their second half carries less than
        10% of the total.
    fpr : ndarray
        ``||z^{k+1} - z^k||^2``.
    attained_suspect : bool
        True when ``||z^k||`` keeps growing, the signature of an unattained
        gap ("gap not attained (suspected)").
    """

    gap_vectors: np.ndarray
    gap_estimate: np.ndarray
    gap_norms: np.ndarray
    best_error: np.ndarray
    best_error_monotone: bool
    scaled_best_error: np.ndarray
    sum_terms: np.ndarray
    sum_partial: np.ndarray
    sum_bounded: bool
    fpr: np.ndarray
    attained_suspect: bool
    notes: list = field(default_factory=list)


# --------------------------------------------------------------- constants


def feas_contraction_constant(gamma_f: float, gamma_g: float, lam: float, mu_rho: float) -> float:
    """Contraction factor of ``d_int`` for squared-distance PRS.

    Examples
    --------
    >>> round(feas_contraction_constant(0.5, 0.5, 1.0, 1.0), 12) == round(0.5 ** 0.5, 12)
    True
    """
    if not (gamma_f > 0 and gamma_g > 0 and 0 < lam <= 1):
        raise ValueError("need positive stepsizes and lambda in (0, 1]")
    if mu_rho < 1:
        raise ValueError("mu_rho must be at least 1")
    tg = 2.0 * gamma_g + 1.0
    tf = 2.0 * gamma_f + 1.0
    num = 4.0 * lam * min(gamma_g / tg ** 2, gamma_f / tf ** 2)
    den = mu_rho ** 2 * max(16.0 * gamma_g ** 2 / tg ** 2, 1.0)
    return math.sqrt(min(1.0, max(0.0, 1.0 - num / den)))


def map_strengthened_constant(mu_rho: float) -> float:
    """Sharper MAP factor ``(1 - 1/mu^2)^{1/2}``."""
    if mu_rho < 1:
        raise ValueError("mu_rho must be at least 1")
    return math.sqrt(1.0 - 1.0 / mu_rho ** 2)


def product_space_mu(m: int, mu_rho: float) -> float:
    """Regularity constant of ``{C_1 x ... x C_m, D}``: ``sqrt(1 + 4 m mu^2)``."""
    if m < 2 or mu_rho < 1:
        raise ValueError("need m >= 2 and mu_rho >= 1")
    return math.sqrt(1.0 + 4.0 * m * mu_rho ** 2)


def subspace_mu_bound(c_F: float) -> float:
    """Regularity bound ``2/sqrt(1 - c_F)`` for two subspaces with Friedrichs cosine ``c_F``."""
    if not 0.0 <= c_F < 1.0:
        raise ValueError("need 0 <= c_F < 1")
    return 2.0 / math.sqrt(1.0 - c_F)


def default_radius(z0, intersection: Optional[ConvexSet] = None) -> float:
    """Ball radius ``2||z0|| + 2 d_int(z0)`` containing all Fejer-monotone iterates."""
    z0 = as_vec(z0)
    d = intersection.distance(z0) if intersection is not None else 0.0
    return 2.0 * float(np.linalg.norm(z0)) + 2.0 * d


def estimate_mu_lower_bound(problem: FeasibilityProblem, rho: float, samples: int = 2000,
                            seed: int = 0, dim: Optional[int] = None) -> float:
    """Empirical LOWER bound on the regularity constant.

    Samples points uniformly in ``B(0, rho)`` and returns the largest ratio
    ``d_int(x) / max_i d_i(x)`` seen (at least 1). Sampling can only
    underestimate the true constant, so the value must not be used as a
    certified ``mu_rho``.
    """
    if problem.intersection is None:
        raise ValueError("an intersection projector is required")
    if dim is None:
        raise ValueError("dimension of the ambient space is required")
    rng = np.random.default_rng(seed)
    best = 1.0
    for _ in range(samples):
        v = rng.standard_normal(dim)
        v *= rho * rng.random() ** (1.0 / dim) / np.linalg.norm(v)
        dmax = max(C.distance(v) for C in problem.sets)
        if dmax > 0:
            best = max(best, problem.intersection.distance(v) / dmax)
    return best


# ---------------------------------------------------------------- two sets


def feas_prs_step(Cf: ConvexSet, Cg: ConvexSet, gamma_f: float, gamma_g: float, lam: float, z):
    """One squared-distance PRS step.

    Returns
    -------
    z_next, x_f, x_g : ndarray

    Examples
    --------
    >>> from splitcert.catalog import line_through_origin
    >>> import numpy as np
    >>> Cf = line_through_origin([1.0, 0.0])
    >>> Cg = line_through_origin([np.cos(np.pi / 3), np.sin(np.pi / 3)])
    >>> z, _, _ = feas_prs_step(Cf, Cg, 0.5, 0.5, 1.0, [1.0, 0.0])
    >>> np.allclose(z, [0.25, 0.0])
    True
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    z = as_vec(z)
    ag, bg = dist_sq_prox_coeffs(gamma_g)
    af, bf = dist_sq_prox_coeffs(gamma_f)
    x_g = ag * z + bg * Cg.project(z)
    r = 2.0 * x_g - z
    x_f = af * r + bf * Cf.project(r)
    return z + 2.0 * lam * (x_f - x_g), x_f, x_g


def _sq(v) -> float:
    return float(np.dot(v, v))


def run_feasibility(Cf: ConvexSet, Cg: ConvexSet, z0, max_iters: int,
                    stepsizes: StepsizePair = StepsizePair(0.5, 0.5),
                    schedule: RelaxationSchedule = RelaxationSchedule.constant(1.0),
                    mu_rho: Optional[float] = None, intersection: Optional[ConvexSet] = None,
                    xstar=None, assert_inequalities: bool = True, tol: float = 1e-9,
                    thin: bool = False, fpr_stop: float = -1.0) -> IterationTrace:
    """Run squared-distance PRS for ``Cf`` and ``Cg``.

    Parameters
    ----------
    Cf, Cg : ConvexSet
    z0 : array_like
    max_iters : int
    stepsizes : StepsizePair
        ``(gamma_f_k, gamma_g_k)``; MAP by default.
    schedule : RelaxationSchedule
        ``lambda_k``; 1 by default.
    mu_rho : float, optional
        Regularity constant; with ``intersection`` enables the per-step
        contraction check of ``d_int``.
    intersection : ConvexSet, optional
        Projector onto ``Cf & Cg``.
    xstar : array_like, optional
        A point of ``Cf & Cg`` for the fundamental inequality; defaults to the
        projection of ``z0`` onto ``intersection`` when available.
    assert_inequalities : bool
    tol : float
        Relative tolerance scaled by ``max(1, ||z0 - x*||^2)``.
    thin : bool
    fpr_stop : float
        Stop once ``||T z - z||^2 <= fpr_stop`` (negative: never).

    Returns
    -------
    IterationTrace
        Columns ``d_Cf, d_Cg, d_int`` hold distances of ``z^k``;
        ``obj_gap_nonergodic`` holds ``d_Cf(x_f)^2 + d_Cg(x_g)^2``.
    """
    z = as_vec(z0).copy()
    tb = TraceBuilder("feasibility", math.nan, thin=thin)
    tb.meta.update(extra_columns=FEAS_COLUMNS, schedule=schedule.label,
                   Cf=Cf.name, Cg=Cg.name)
    if xstar is None and intersection is not None:
        xstar = intersection.project(z)
    xstar = None if xstar is None else as_vec(xstar)
    monitor = None
    if assert_inequalities:
        scale = _sq(z - xstar) if xstar is not None else 1.0
        monitor = InequalityMonitor(scale, tol)
    for k in range(int(max_iters)):
        gf, gg = stepsizes(k)
        lam = schedule(k)
        z_next, x_f, x_g = feas_prs_step(Cf, Cg, gf, gg, lam, z)
        check_finite(k, z_next)
        fpr = 4.0 * _sq(x_f - x_g)
        step_sq = _sq(z_next - z)
        dgz, dfz = Cg.distance(z), Cf.distance(z)
        dfx, dgx = Cf.distance(x_f), Cg.distance(x_g)
        row = {"k": k, "lam": lam, "gamma_f": gf, "gamma_g": gg, "fpr": fpr,
               "step_sq": step_sq, "d_Cf": dfz, "d_Cg": dgz,
               "obj_gap_nonergodic": dfx ** 2 + dgx ** 2}
        if intersection is not None:
            row["d_int"] = intersection.distance(z)
        if xstar is not None:
            row["dist_to_zstar"] = math.sqrt(_sq(z - xstar))
        if monitor is not None:
            m = monitor
            m.leq("distance-identity-g", k, abs(dgx - dgz / (2.0 * gg + 1.0)), 0.0, tol=1e-10)
            r = 2.0 * x_g - z
            m.leq("distance-identity-f", k,
                  abs(dfx - Cf.distance(r) / (2.0 * gf + 1.0)), 0.0, tol=1e-10)
            if xstar is not None:
                m.leq("feasibility-fundamental", k,
                      8.0 * lam * (gf * dfx ** 2 + gg * dgx ** 2),
                      _sq(z - xstar) - _sq(z_next - xstar) + (1.0 - 1.0 / lam) * step_sq)
            if mu_rho is not None and intersection is not None:
                C = feas_contraction_constant(gf, gg, lam, mu_rho)
                m.leq("linear-regularity-contraction", k,
                      intersection.distance(z_next), C * row["d_int"])
        tb.append(row, {"z": z, "x_f": x_f, "x_g": x_g})
        z = z_next
        if fpr <= fpr_stop:
            break
    return tb.finish({"z": z}, monitor, mu_rho=mu_rho)


def map_run(Cf: ConvexSet, Cg: ConvexSet, z0, max_iters: int, **kwargs) -> IterationTrace:
    """Method of alternating projections ``z+ = P_Cf P_Cg z``.

    Runs :func:`run_feasibility` with ``gamma_f = gamma_g = 1/2`` and
    ``lambda = 1``; keyword arguments are forwarded.
    """
    kwargs.pop("stepsizes", None)
    kwargs.pop("schedule", None)
    tr = run_feasibility(Cf, Cg, z0, max_iters, StepsizePair(0.5, 0.5),
                         RelaxationSchedule.constant(1.0), **kwargs)
    return tr


def map_infeasible_diagnostics(Cf: ConvexSet, Cg: ConvexSet, trace: IterationTrace) -> GapDiagnostics:
    """Gap-vector diagnostics for MAP on possibly disjoint sets.

    The final iterate serves as the reference: the point
    ``x = (z_ref + P_Cg z_ref)/2`` satisfies ``x - P_Cf x = P_Cg x - x``
    whenever ``z_ref = P_Cf P_Cg z_ref``.
    """
    if trace.thin:
        raise ValueError("diagnostics need a full trace")
    Z = np.vstack([trace.vectors["z"], trace.last["z"][None, :]])
    PgZ = np.array([Cg.project(z) for z in Z])
    PfPgZ = np.array([Cf.project(p) for p in PgZ])
    PfZ = np.array([Cf.project(z) for z in Z])
    gaps = PgZ - PfPgZ
    est = gaps[-1]
    norms = np.linalg.norm(gaps, axis=1)
    err = np.sum(((PgZ - PfZ) - est) ** 2, axis=1)
    _, best = best_transform(err)
    mono = bool(np.all(np.diff(best) <= 0))
    scaled = best * (np.arange(best.shape[0]) + 1.0)

    zr = Z[-1]
    x = 0.5 * (zr + Cg.project(zr))
    ug = x - Cg.project(x)
    uf = x - Cf.project(x)
    terms = (np.sum((0.5 * (Z - PgZ) - ug) ** 2, axis=1)
             + np.sum((0.5 * (PgZ - PfPgZ) - uf) ** 2, axis=1))
    partial = np.cumsum(terms)
    total = float(partial[-1])
    tail = float(terms[terms.shape[0] // 2:].sum())
    bounded = bool(np.all(np.diff(partial) >= 0) and np.isfinite(total)
                   and (total <= 1e-300 or tail <= 0.1 * total))
    fpr = np.sum(np.diff(Z, axis=0) ** 2, axis=1)

    zn = np.linalg.norm(Z, axis=1)
    half = zn.shape[0] // 2
    growing = bool(np.all(np.diff(zn[half:]) > 0)) and zn[-1] >= 10.0 * max(1.0, zn[0])
    notes = ["gap not attained (suspected)"] if growing else []
    return GapDiagnostics(gaps, est, norms, best, mono, scaled, terms,
                          partial, bounded, fpr, growing, notes)


# --------------------------------------------------------------- many sets


def _block_update(C: ConvexSet, zi, zbar, ag, bg, af, bf, lam):
    x_g = ag * zi + bg * zbar
    r = 2.0 * x_g - zi
    x_f = af * r + bf * C.project(r)
    return zi + 2.0 * lam * (x_f - x_g)


def multi_set_step(problem: FeasibilityProblem, gamma_f: float, gamma_g: float, lam: float,
                   zz, executor: Optional[Executor] = None) -> np.ndarray:
    """One step of the parallel product-space algorithm.

    Parameters
    ----------
    problem : FeasibilityProblem
        Sets ``C_1, ..., C_m`` in ``R^n``.
    gamma_f, gamma_g : float
    lam : float
    zz : array_like
        Stacked blocks ``(z_1, ..., z_m)`` of length ``m n``.
    executor : concurrent.futures.Executor, optional
        When given, the ``m`` block updates are submitted to it.

    Returns
    -------
    ndarray
        The next stacked iterate.
    """
    zz = as_vec(zz)
    m = problem.m
    if zz.shape[0] % m:
        raise ValueError("length of zz is not a multiple of the number of sets")
    Z = zz.reshape(m, -1)
    zbar = Z.mean(axis=0)
    ag, bg = dist_sq_prox_coeffs(gamma_g)
    af, bf = dist_sq_prox_coeffs(gamma_f)
    args = [(C, Z[i], zbar, ag, bg, af, bf, lam) for i, C in enumerate(problem.sets)]
    if executor is None:
        blocks = [_block_update(*a) for a in args]
    else:
        blocks = list(executor.map(lambda a: _block_update(*a), args))
    return np.concatenate(blocks)


def product_space_problem(problem: FeasibilityProblem, n: int) -> tuple[ConvexSet, ConvexSet]:
    """Two-set reformulation ``(C_1 x ... x C_m, D)`` in ``R^{m n}``."""
    return product_set(problem.sets, n), diagonal_set(problem.m, n)


def run_multi_set(problem: FeasibilityProblem, zz0, max_iters: int,
                  stepsizes: StepsizePair = StepsizePair(0.5, 0.5),
                  schedule: RelaxationSchedule = RelaxationSchedule.constant(1.0),
                  executor: Optional[Executor] = None) -> IterationTrace:
    """Iterate :func:`multi_set_step`; records ``x^k = mean of the blocks``.

    Columns ``max_dist`` hold ``max_i d_{C_i}(x^k)``.
    """
    zz = as_vec(zz0).copy()
    m = problem.m
    tb = TraceBuilder("multi-set", math.nan)
    tb.meta.update(extra_columns=("max_dist",), m=m)
    for k in range(int(max_iters)):
        gf, gg = stepsizes(k)
        lam = schedule(k)
        nxt = multi_set_step(problem, gf, gg, lam, zz, executor)
        check_finite(k, nxt)
        x = zz.reshape(m, -1).mean(axis=0)
        d = max(C.distance(x) for C in problem.sets)
        step = _sq(nxt - zz)
        tb.append({"k": k, "lam": lam, "fpr": step / lam ** 2, "step_sq": step, "max_dist": d},
                  {"z": zz, "x": x})
        zz = nxt
    x = zz.reshape(m, -1).mean(axis=0)
    return tb.finish({"z": zz, "x": x})


def averaged_map(problem: FeasibilityProblem, x0, max_iters: int,
                 executor: Optional[Executor] = None) -> IterationTrace:
    """Averaged projections ``x+ = (1/m) sum_i P_{C_i}(x)`` via the product space.

    Starts the parallel algorithm at ``(x0, ..., x0)`` with
    ``gamma_f = gamma_g = 1/2`` and ``lambda = 1``; ``trace.vectors["x"]``
    holds the block means.
    """
    x0 = as_vec(x0)
    return run_multi_set(problem, np.tile(x0, problem.m), max_iters, executor=executor)
