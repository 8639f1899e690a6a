"""Relaxed ADMM for ``min f(x) + g(y)  s.t.  Ax + By = b``.

The method is relaxed PRS applied to the dual functions
``d_f(w) = f*(A^T w)`` and ``d_g(w) = g*(B^T w) - <w, b>``. With
``w_dg^{-1} = z^0``, ``x^{-1} = y^{-1} = 0`` and ``lambda_{-1} = 1/2`` the
updates are, in order::

    y+    = argmin g(y) - <w_dg, A x + B y - b>
                 + gamma/2 ||A x + B y - b + (2 lam - 1)(A x + B y_old - b)||^2
    w_dg+ = w_dg - gamma (A x + B y+ - b) - gamma (2 lam - 1)(A x + B y_old - b)
    x+    = argmin f(x) - <w_dg+, A x + B y+ - b> + gamma/2 ||A x + B y+ - b||^2
    w_df+ = w_dg+ - gamma (A x+ + B y+ - b)

and the dual PRS variable is ``z = w_dg + gamma (B y - b)``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .catalog import quadratic
from .prox import ProxFunction, as_vec
from .rates import paper_constants, prs_linear_constant
from .schedules import SolverConfig
from .trace import InequalityMonitor, IterationTrace, TraceBuilder, check_finite

__all__ = [
    "UnsupportedSubproblemError",
    "SingularSystemError",
    "AdmmProblem",
    "DualConstants",
    "AdmmReferences",
    "admm_step",
    "run_admm",
    "dual_constants",
    "admm_rate_constant",
    "admm_implied_bounds",
    "ImpliedBoundsReport",
    "primal_dual_gap_terms",
    "quadratic_conjugate",
    "dual_functions",
    "solve_kkt",
    "admm_references",
    "admm_sublinear_bounds",
    "ADMM_COLUMNS",
]

ADMM_COLUMNS = ("residual_norm_sq", "w_dg_dist", "w_df_dist")


class UnsupportedSubproblemError(ValueError):
    """The x- or y-subproblem has no closed form in the solvable catalog."""


class SingularSystemError(np.linalg.LinAlgError):
    """``P + gamma M^T M`` is numerically singular."""


def _quad_data(fn: ProxFunction, n: int):
    """``(P, q)`` when ``fn`` is a catalog quadratic in ``R^n``, else ``None``."""
    p = fn.params or {}
    kind = p.get("kind")
    if kind == "quadratic":
        P = np.asarray(p["P"], dtype=float)
        q = np.asarray(p["q"], dtype=float)
        if P.shape != (n, n):
            raise ValueError(f"quadratic of size {P.shape[0]} does not match {n} columns")
        return P, q
    if kind == "scaled-norm-squared":
        return float(p["c"]) * np.eye(n), np.zeros(n)
    if kind == "zero":
        return np.zeros((n, n)), np.zeros(n)
    return None


def _signed_identity(M: np.ndarray) -> Optional[float]:
    """``s`` if ``M = s I`` with ``s = +-1``, else ``None``."""
    if M.shape[0] != M.shape[1]:
        return None
    for s in (1.0, -1.0):
        if np.array_equal(M, s * np.eye(M.shape[0])):
            return s
    return None


class _Solver:
    """Closed-form ``argmin h(u) - <w, M u + c> + gamma/2 ||M u + c||^2``."""

    def __init__(self, fn: ProxFunction, M: np.ndarray, label: str):
        self.fn = fn
        self.M = M
        self.label = label
        self.quad = _quad_data(fn, M.shape[1])
        self.sign = _signed_identity(M)
        if self.quad is None and self.sign is None:
            raise UnsupportedSubproblemError(
                f"{label}-update: {fn.name} needs {label == 'x' and 'A' or 'B'} = +-identity")
        self._factors: dict[float, tuple] = {}
        self._lock = threading.Lock()

    def _factor(self, gamma: float):
        with self._lock:
            fac = self._factors.get(gamma)
            if fac is None:
                P, _ = self.quad
                K = P + gamma * self.M.T @ self.M
                try:
                    fac = sla.cho_factor(K)
                except np.linalg.LinAlgError as exc:
                    raise SingularSystemError(
                        f"{self.label}-update matrix P + gamma M^T M is singular") from exc
                d = np.abs(np.diag(fac[0]))
                if d.min() <= 1e-12 * max(1.0, d.max()):
                    raise SingularSystemError(
                        f"{self.label}-update matrix P + gamma M^T M is singular")
                self._factors[gamma] = fac
            return fac

    def __call__(self, gamma: float, w: np.ndarray, c: np.ndarray) -> np.ndarray:
        if self.quad is not None:
            _, q = self.quad
            rhs = -q + self.M.T @ w - gamma * (self.M.T @ c)
            return sla.cho_solve(self._factor(gamma), rhs)
        # M = sI: minimize h(u) + gamma/2 ||u - s(w/gamma - c)||^2
        return self.fn.prox(1.0 / gamma, self.sign * (w / gamma - c))


@dataclass
class AdmmProblem:
    """Linearly constrained problem ``min f(x) + g(y)  s.t.  Ax + By = b``.

    Parameters
    ----------
    f, g : ProxFunction
        Quadratics (``quadratic``, ``scaled-norm-squared``, ``zero``) with any
        matrix, or any prox-capable catalog function when the matching
        matrix is ``+-identity`` (for example ``l1`` or a box indicator).
    A, B : array_like
        ``d x n1`` and ``d x n2`` matrices.
    b : array_like
        Right-hand side in ``R^d``.

    Attributes
    ----------
    alpha_A, alpha_B : float
        ``lambda_min(A A^T)``, ``lambda_min(B B^T)`` (0 when rank deficient).
    norm_A, norm_B : float
        Largest singular values.
    """

    f: ProxFunction
    g: ProxFunction
    A: np.ndarray
    B: np.ndarray
    b: np.ndarray
    alpha_A: float = field(init=False)
    alpha_B: float = field(init=False)
    norm_A: float = field(init=False)
    norm_B: float = field(init=False)

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        d = self.b.shape[0]
        if self.A.shape[0] != d or self.B.shape[0] != d:
            raise ValueError("A, B and b must have the same number of rows")
        for M in (self.A, self.B, self.b):
            M.setflags(write=False)
        self.norm_A = float(np.linalg.norm(self.A, 2))
        self.norm_B = float(np.linalg.norm(self.B, 2))
        if self.norm_A * self.norm_B == 0:
            raise ValueError("need ||A|| ||B|| != 0")
        self.alpha_A = _alpha(self.A)
        self.alpha_B = _alpha(self.B)
        self._x_solver = _Solver(self.f, self.A, "x")
        self._y_solver = _Solver(self.g, self.B, "y")

    @property
    def dims(self) -> tuple[int, int, int]:
        """``(d, n1, n2)``."""
        return self.b.shape[0], self.A.shape[1], self.B.shape[1]

    def objective(self, x, y) -> float:
        return self.f(x) + self.g(y)

    def residual(self, x, y) -> np.ndarray:
        return self.A @ x + self.B @ y - self.b


def _alpha(M: np.ndarray) -> float:
    w = np.linalg.eigvalsh(M @ M.T)
    top = max(float(w[-1]), 0.0)
    return float(w[0]) if w[0] > 1e-12 * max(1.0, top) else 0.0


@dataclass(frozen=True)
class DualConstants:
    """Regularity of the dual functions ``d_f``, ``d_g``."""

    mu_df: float
    mu_dg: float
    beta_df: float
    beta_dg: float


def dual_constants(problem: AdmmProblem) -> DualConstants:
    """``mu_df = beta_f alpha_A``, ``mu_dg = beta_g alpha_B``,
    ``beta_df = mu_f/||A||^2``, ``beta_dg = mu_g/||B||^2``."""
    f, g = problem.f, problem.g
    return DualConstants(
        mu_df=f.beta * problem.alpha_A,
        mu_dg=g.beta * problem.alpha_B,
        beta_df=f.mu / problem.norm_A ** 2,
        beta_dg=g.mu / problem.norm_B ** 2,
    )


def admm_rate_constant(case: int, problem: AdmmProblem, gamma: float, lam: float) -> float:
    """Per-step contraction ``||z^{k+1} - z*|| <= C ||z^k - z*||`` of relaxed ADMM.

    Parameters
    ----------
    case : {1, 2, 3, 4}
        1: ``mu_g beta_g alpha_B > 0``; 2: ``mu_f beta_f alpha_A > 0``;
        3: ``mu_f beta_g alpha_B > 0``; 4: ``mu_g beta_f alpha_A > 0``.
    problem : AdmmProblem
    gamma, lam : float

    Raises
    ------
    ConditionNotMetError
        When the product named by ``case`` vanishes.

    Notes
    -----
    Each case is the primal linear-rate factor applied to ``(d_f, d_g)``
    with the constants of :func:`dual_constants`.
    """
    dc = dual_constants(problem)
    from .rates import ConditionNotMetError

    table = {
        1: ("g-regular", dc.mu_dg, dc.beta_dg, "mu_g*beta_g*alpha_B"),
        2: ("f-regular", dc.mu_df, dc.beta_df, "mu_f*beta_f*alpha_A"),
        3: ("mixed", dc.mu_dg, dc.beta_df, "mu_f*beta_g*alpha_B"),
        4: ("mixed", dc.mu_df, dc.beta_dg, "mu_g*beta_f*alpha_A"),
    }
    if case not in table:
        raise ValueError("case must be 1, 2, 3 or 4")
    which, mu, beta, prod = table[case]
    if not (mu > 0 and beta > 0):
        raise ConditionNotMetError(f"case {case} needs {prod} > 0")
    return prs_linear_constant(which, mu, beta, gamma, lam)


# ------------------------------------------------------------------ duals


def quadratic_conjugate(fn: ProxFunction, n: Optional[int] = None) -> ProxFunction:
    """Conjugate of a strongly convex catalog quadratic.

    ``f(x) = 1/2 x^T P x + q^T x`` has ``f*(u) = 1/2 (u - q)^T P^{-1} (u - q)``;
    the constant ``-1/2 q^T P^{-1} q`` is dropped.
    """
    if n is None:
        n = len(np.asarray(fn.params.get("q", []))) or None
    data = _quad_data(fn, n) if n else None
    if data is None:
        raise UnsupportedSubproblemError("conjugates are available only for quadratics")
    P, q = data
    Pinv = np.linalg.inv(P)
    Pinv = 0.5 * (Pinv + Pinv.T)
    return quadratic(Pinv, -Pinv @ q)


def dual_functions(problem: AdmmProblem) -> tuple[ProxFunction, ProxFunction]:
    """Quadratic ``(d_f, d_g)`` for problems with strongly convex quadratic f and g.

    ``d_f(w) = 1/2 w^T A P_f^{-1} A^T w - w^T A P_f^{-1} q_f`` and
    ``d_g(w) = 1/2 w^T B P_g^{-1} B^T w - w^T (B P_g^{-1} q_g + b)``, up to
    constants.
    """
    _, n1, n2 = problem.dims
    out = []
    for fn, M, n, shift in ((problem.f, problem.A, n1, 0.0), (problem.g, problem.B, n2, problem.b)):
        data = _quad_data(fn, n)
        if data is None:
            raise UnsupportedSubproblemError("dual functions need quadratic f and g")
        P, q = data
        Pinv = np.linalg.inv(P)
        Pd = M @ Pinv @ M.T
        out.append(quadratic(0.5 * (Pd + Pd.T), -M @ Pinv @ q - shift))
    return out[0], out[1]


@dataclass(frozen=True)
class AdmmReferences:
    """Optimal primal-dual data and the matching dual PRS fixed point."""

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    z: np.ndarray
    opt: float


def solve_kkt(problem: AdmmProblem, gamma: float) -> AdmmReferences:
    """Exact optimum of a quadratic problem from its KKT system.

    Solves ``P_f x + q_f = A^T w``, ``P_g y + q_g = B^T w``, ``Ax + By = b``
    and sets ``z* = w* + gamma (B y* - b)``.
    """
    d, n1, n2 = problem.dims
    df = _quad_data(problem.f, n1)
    dg = _quad_data(problem.g, n2)
    if df is None or dg is None:
        raise UnsupportedSubproblemError("KKT solve needs quadratic f and g")
    (Pf, qf), (Pg, qg) = df, dg
    A, B = problem.A, problem.B
    N = n1 + n2 + d
    K = np.zeros((N, N))
    K[:n1, :n1] = Pf
    K[:n1, n1 + n2:] = -A.T
    K[n1:n1 + n2, n1:n1 + n2] = Pg
    K[n1:n1 + n2, n1 + n2:] = -B.T
    K[n1 + n2:, :n1] = A
    K[n1 + n2:, n1:n1 + n2] = B
    rhs = np.concatenate([-qf, -qg, problem.b])
    sol = np.linalg.solve(K, rhs)
    x, y, w = sol[:n1], sol[n1:n1 + n2], sol[n1 + n2:]
    z = w + gamma * (B @ y - problem.b)
    return AdmmReferences(x, y, w, z, problem.objective(x, y))


# ---------------------------------------------------------------- iteration


def admm_step(problem: AdmmProblem, gamma: float, lam: float, state):
    """One relaxed ADMM step.

    Parameters
    ----------
    problem : AdmmProblem
    gamma : float
    lam : float
        ``lambda_k`` in ``(0, 1]``.
    state : tuple
        ``(x^k, y^k, w_dg^k)``.

    Returns
    -------
    x, y, w_dg, w_df : ndarray
        Iterates at ``k + 1``.

    Examples
    --------
    >>> from splitcert.catalog import scaled_norm_squared
    >>> p = AdmmProblem(scaled_norm_squared(), scaled_norm_squared(), [[1.0]], [[1.0]], [0.0])
    >>> x, y, wg, wf = admm_step(p, 1.0, 0.5, (np.zeros(1), np.zeros(1), np.ones(1)))
    >>> round(float(y[0]), 12), round(float(wg[0]), 12)
    (0.5, 0.5)
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    x, y, w = (as_vec(v) for v in state)
    A, B, b = problem.A, problem.B, problem.b
    Ax = A @ x
    r_old = Ax + B @ y - b
    c = Ax - b + (2.0 * lam - 1.0) * r_old
    y1 = problem._y_solver(gamma, w, c)
    By1 = B @ y1
    w1 = w - gamma * (Ax + By1 - b) - gamma * (2.0 * lam - 1.0) * r_old
    x1 = problem._x_solver(gamma, w1, By1 - b)
    w_df = w1 - gamma * (A @ x1 + By1 - b)
    return x1, y1, w1, w_df


def admm_references(problem: AdmmProblem, gamma: float, w0, iters: int) -> AdmmReferences:
    """References from the exact KKT solve when possible, else a long run at ``lambda = 1/2``."""
    try:
        return solve_kkt(problem, gamma)
    except (UnsupportedSubproblemError, np.linalg.LinAlgError):
        pass
    _, n1, n2 = problem.dims
    x, y, w = np.zeros(n1), np.zeros(n2), as_vec(w0)
    for _ in range(int(iters)):
        x, y, w, _ = admm_step(problem, gamma, 0.5, (x, y, w))
    return AdmmReferences(x, y, w, w + gamma * (problem.B @ y - problem.b), problem.objective(x, y))


def _sq(v) -> float:
    return float(np.dot(v, v))


def run_admm(problem: AdmmProblem, config: SolverConfig, w0,
             refs: Optional[AdmmReferences] = None, residual_stop: float = 0.0) -> IterationTrace:
    """Run relaxed ADMM from ``w_dg^{-1} = z^0 = w0``.

    Parameters
    ----------
    problem : AdmmProblem
    config : SolverConfig
        ``gamma``, ``schedule``, ``max_iters``, ``assert_inequalities``,
        ``tol`` and ``thin`` are used.
    w0 : array_like
        Initial dual PRS variable ``z^0``.
    refs : AdmmReferences, optional
        Optimal references; computed (KKT solve or a ``10 * max_iters``
        pre-run) when assertions are on and none are given.
    residual_stop : float
        Stop once ``||r^k||^2 <= residual_stop`` and the objective has not
        moved by more than ``residual_stop`` relative to the last step.

    Returns
    -------
    IterationTrace
        Columns ``residual_norm_sq``, ``step_sq``, ``fpr``, ``obj`` and, with
        references, ``obj_gap_nonergodic``, ``S_f`` (``S_df``), ``S_g``
        (``S_dg``), ``w_dg_dist``, ``w_df_dist``, ``dist_to_zstar``.
        Vectors ``z, x, y, w_dg, w_df`` and the ergodic ``xbar, ybar,
        wbar_dg, wbar_df``.
    """
    gamma = config.gamma
    sched = config.schedule
    d, n1, n2 = problem.dims
    z0 = as_vec(w0)
    if z0.shape[0] != d:
        raise ValueError(f"w0 must have length {d}")
    if refs is None and config.assert_inequalities:
        refs = admm_references(problem, gamma, z0, 10 * config.max_iters)
    dc = dual_constants(problem)
    A, B, b = problem.A, problem.B, problem.b

    tb = TraceBuilder("admm", gamma, thin=config.thin)
    tb.meta.update(extra_columns=ADMM_COLUMNS, schedule=sched.label)
    monitor = None
    u = None
    if refs is not None:
        u = refs.z - refs.w
        Axs, Bys = A @ refs.x, B @ refs.y
        if config.assert_inequalities:
            monitor = InequalityMonitor(_sq(z0 - refs.z), config.tol)

    # k = -1 initialization
    x, y, w_dg, w_df = admm_step(problem, gamma, 0.5, (np.zeros(n1), np.zeros(n2), z0))
    z = z0
    Lam = 0.0
    sums = {"x": np.zeros(n1), "y": np.zeros(n2), "wg": np.zeros(d), "wf": np.zeros(d)}
    prev_obj = None
    for k in range(int(config.max_iters)):
        lam = sched(k)
        r = A @ x + B @ y - b
        z_next = z + 2.0 * lam * (w_df - w_dg)
        check_finite(k, z_next, x, y)
        step_sq = _sq(z_next - z)
        obj = problem.objective(x, y)
        Lam += lam
        for key, v in (("x", x), ("y", y), ("wg", w_dg), ("wf", w_df)):
            sums[key] += lam * v
        row = {"k": k, "lam": lam, "residual_norm_sq": _sq(r), "step_sq": step_sq,
               "fpr": 4.0 * _sq(w_df - w_dg), "obj": obj}
        if refs is not None:
            Ax, By = A @ x, B @ y
            row.update(
                obj_gap_nonergodic=obj - refs.opt,
                S_f=max(0.5 * dc.mu_df * _sq(w_df - refs.w), 0.5 * dc.beta_df * _sq(Ax - Axs)),
                S_g=max(0.5 * dc.mu_dg * _sq(w_dg - refs.w), 0.5 * dc.beta_dg * _sq(By - Bys)),
                w_dg_dist=math.sqrt(_sq(w_dg - refs.w)),
                w_df_dist=math.sqrt(_sq(w_df - refs.w)),
                dist_to_zstar=math.sqrt(_sq(z - refs.z)),
            )
            if monitor is not None:
                monitor.leq("step-identity", k,
                            math.sqrt(_sq(z_next - z + 2.0 * gamma * lam * r)), 0.0, tol=1e-10)
                monitor.leq("admm-upper", k, 4.0 * gamma * lam * (obj - refs.opt),
                            _sq(z - u) - _sq(z_next - u) + (1.0 - 1.0 / lam) * step_sq)
                monitor.leq("admm-lower", k, float(r @ refs.w), obj - refs.opt)
                monitor.leq("fejer", k, _sq(z_next - refs.z),
                            _sq(z - refs.z) - (1.0 - lam) / lam * step_sq)
        tb.append(row, {"z": z, "x": x, "y": y, "w_dg": w_dg, "w_df": w_df,
                        "xbar": sums["x"] / Lam, "ybar": sums["y"] / Lam,
                        "wbar_dg": sums["wg"] / Lam, "wbar_df": sums["wf"] / Lam})
        # next iterates; the reconstruction z = w_dg + gamma (B y - b) holds for each
        x, y, w_dg, w_df = admm_step(problem, gamma, lam, (x, y, w_dg))
        z = z_next
        if residual_stop > 0 and row["residual_norm_sq"] <= residual_stop:
            if prev_obj is not None and abs(obj - prev_obj) <= residual_stop * max(1.0, abs(obj)):
                break
        prev_obj = obj
    last = {"z": z, "x": x, "y": y, "w_dg": w_dg, "w_df": w_df}
    meta = {"dual_constants": dc.__dict__}
    if refs is not None:
        meta["refs"] = {"x": refs.x.tolist(), "y": refs.y.tolist(), "w": refs.w.tolist(),
                        "z": refs.z.tolist(), "opt": refs.opt}
    return tb.finish(last, monitor, **meta)


# ---------------------------------------------------------------- analysis


@dataclass
class ImpliedBoundsReport:
    """Outcome of the linear-rate consequence checks.

    ``violations`` maps each bound name to the number of indices where it
    fails; ``max_relative`` holds the largest ``(lhs - rhs)/max(1, rhs0)``.
    """

    checked: int
    violations: dict
    max_relative: dict

    @property
    def passed(self) -> bool:
        return all(v == 0 for v in self.violations.values())


def admm_implied_bounds(trace: IterationTrace, contraction_factors: Sequence[float], wstar, zstar,
                        gamma: float, refs: Optional[AdmmReferences] = None, problem: Optional[AdmmProblem] = None,
                        tol: float = 1e-8) -> ImpliedBoundsReport:
    """Check the consequences of per-step contraction factors ``C_k``.

    With ``P_k = prod_{i<k} C_i`` and ``D = ||z^0 - z*||``, checks for every
    recorded ``k``::

        ||w_dg^k - w*||^2 + gamma^2 ||B y^k - B y*||^2 <= D^2 P_k^2
        ||w_df^k - w*||^2 + gamma^2 ||A x^k - A x*||^2 <= D^2 P_k^2
        ||r^k||^2 <= D^2 P_k^2 / gamma^2
        -D ||w*|| P_k / gamma <= gap_k <= (D + ||w*||) D P_k / gamma

    The two primal distance checks need ``refs`` and ``problem``.
    """
    C = np.asarray(contraction_factors, dtype=float)
    n = len(trace)
    if C.shape[0] < n:
        C = np.concatenate([C, np.full(n - C.shape[0], C[-1] if C.size else 1.0)])
    if np.any((C < 0) | (C > 1)):
        raise ValueError("contraction factors must lie in [0, 1]")
    P = np.concatenate([[1.0], np.cumprod(C[: n - 1])])
    wstar = as_vec(wstar)
    zstar = as_vec(zstar)
    Z = trace.vectors["z"]
    D = math.sqrt(_sq(Z[0] - zstar))
    wn = math.sqrt(_sq(wstar))
    scale = max(1.0, D * D)
    env = D * D * P ** 2
    out = {}
    wg = trace.vectors["w_dg"]
    wf = trace.vectors["w_df"]
    checks = {}
    if refs is not None and problem is not None:
        By = trace.vectors["y"] @ problem.B.T
        Ax = trace.vectors["x"] @ problem.A.T
        checks["w_dg+By"] = (np.sum((wg - wstar) ** 2, axis=1)
                             + gamma ** 2 * np.sum((By - problem.B @ refs.y) ** 2, axis=1), env)
        checks["w_df+Ax"] = (np.sum((wf - wstar) ** 2, axis=1)
                             + gamma ** 2 * np.sum((Ax - problem.A @ refs.x) ** 2, axis=1), env)
    checks["residual"] = (trace["residual_norm_sq"], env / gamma ** 2)
    if "obj_gap_nonergodic" in trace.columns:
        gap = trace["obj_gap_nonergodic"]
        checks["objective-upper"] = (gap, (D + wn) * D * P / gamma)
        checks["objective-lower"] = (-gap, D * wn * P / gamma)
    viol, mx = {}, {}
    for name, (lhs, rhs) in checks.items():
        rel = (np.asarray(lhs) - rhs) / scale
        viol[name] = int(np.sum(rel > tol))
        mx[name] = float(np.max(rel))
    return ImpliedBoundsReport(n, viol, mx)


def primal_dual_gap_terms(trace: IterationTrace, problem: AdmmProblem, refs: AdmmReferences) -> dict:
    """Dual S-terms and their best-iterate and ergodic variants.

    Returns
    -------
    dict
        ``S_df``, ``S_dg`` (per ``k``), ``best`` (running minimum of
        ``S_df + S_dg``), ``ergodic`` (the left side of the ergodic bound,
        built from the ``lambda``-weighted averages), ``ergodic_bound``
        ``||z^0 - z*||^2/(4 gamma Lambda_k)`` and ``ybar_dist_sq``.
    """
    if trace.thin:
        raise ValueError("gap terms need a full trace")
    dc = dual_constants(problem)
    A, B = problem.A, problem.B
    ws = refs.w
    V = trace.vectors

    def sq_rows(M):
        return np.sum(M ** 2, axis=1)

    Axs, Bys = A @ refs.x, B @ refs.y
    S_df = np.maximum(0.5 * dc.mu_df * sq_rows(V["w_df"] - ws),
                      0.5 * dc.beta_df * sq_rows(V["x"] @ A.T - Axs))
    S_dg = np.maximum(0.5 * dc.mu_dg * sq_rows(V["w_dg"] - ws),
                      0.5 * dc.beta_dg * sq_rows(V["y"] @ B.T - Bys))
    erg = (np.maximum(dc.mu_df * sq_rows(V["wbar_df"] - ws),
                      dc.beta_df * sq_rows(V["xbar"] @ A.T - Axs))
           + np.maximum(dc.mu_dg * sq_rows(V["wbar_dg"] - ws),
                        dc.beta_dg * sq_rows(V["ybar"] @ B.T - Bys)))
    Lam = np.cumsum(trace.lam)
    D2 = _sq(V["z"][0] - refs.z)
    return {
        "S_df": S_df,
        "S_dg": S_dg,
        "best": np.minimum.accumulate(S_df + S_dg),
        "ergodic": erg,
        "ergodic_bound": D2 / (4.0 * trace.gamma * Lam),
        "ybar_dist_sq": sq_rows(V["ybar"] - refs.y),
    }


def admm_sublinear_bounds(problem: AdmmProblem, gamma: float, k, wdg0_dist_sq: float,
                    z0_dist: float, wstar_norm: float) -> dict:
    """Residual and objective envelopes of standard ADMM with strongly convex g.

    Requires ``lambda = 1/2``, ``mu_g > 0`` and ``gamma < kappa mu_g/||B||^2``.
    With ``beta = mu_g/||B||^2`` and ``E_k = beta^2 ||w_dg^0 - w*||^2 /
    (k^2 (1 + gamma/beta)^2 (beta^2 - gamma^2/kappa^2))`` (the dual FPR
    envelope), returns arrays ``residual = E_k/gamma^2``,
    ``lower = -||w*|| sqrt(E_k)/gamma`` and
    ``upper = (||z^0 - z*|| + ||w*||) sqrt(E_k)/gamma``.
    """
    from .rates import NotApplicableError

    kappa = paper_constants().kappa
    beta = problem.g.mu / problem.norm_B ** 2
    if not beta > 0:
        raise NotApplicableError("needs mu_g > 0")
    if not gamma < kappa * beta:
        raise NotApplicableError(f"needs gamma < kappa mu_g/||B||^2 = {kappa * beta}")
    k = np.asarray(k, dtype=float)
    if np.any(k < 1):
        raise ValueError("bounds hold for k >= 1")
    E = beta ** 2 * wdg0_dist_sq / (k ** 2 * (1.0 + gamma / beta) ** 2 * (beta ** 2 - gamma ** 2 / kappa ** 2))
    s = np.sqrt(E)
    return {"residual": E / gamma ** 2, "lower": -wstar_norm * s / gamma,
            "upper": (z0_dist + wstar_norm) * s / gamma}
